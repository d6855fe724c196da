use super::{BlochDirection, DirectionSet};

/// `[theta, phi]` per setting (outer) and qubit (inner), radians.
const ANGLES: [[[f64; 2]; 6]; 9] = [
    [[1.34851, -1.7187], [0.74451, 1.85896], [2.81234, -1.66384], [1.22444, -2.24737], [2.62025, -1.56922], [1.61654, 2.41608]],
    [[1.62452, -0.16006], [0.83181, -1.13389], [1.24291, -1.56911], [1.86266, 1.89939], [0.78386, 2.4564], [0.32988, 0.14995]],
    [[0.2289, 1.17782], [0.83405, -0.17509], [2.33714, 0.27682], [0.74332, -0.27308], [2.61964, -1.73379], [1.32478, -1.55164]],
    [[0.88628, 0.06155], [0.98653, -2.38924], [2.63105, -1.5318], [0.94539, 2.20137], [1.04552, 0.26519], [1.65486, 1.47209]],
    [[0.9695, 2.22663], [1.64509, 0.36903], [1.06042, -1.5596], [1.70326, -2.5176], [1.60308, 3.08691], [2.42079, -0.27072]],
    [[1.01301, -2.04348], [1.83028, 0.04163], [2.21489, 2.65553], [2.12737, 2.11179], [1.05058, -1.644], [1.56836, -2.29642]],
    [[2.70374, 0.28677], [2.08781, -1.20394], [1.16136, 1.41667], [2.56575, -0.74011], [2.09094, 1.49761], [0.04581, 2.36286]],
    [[1.69042, -1.54368], [1.55645, -1.52536], [1.54184, 3.13342], [2.56242, -2.33567], [1.532, 3.04614], [0.91042, 0.21545]],
    [[1.9898, 3.11515], [2.88169, -3.04215], [1.58265, -3.12376], [1.08649, -2.97173], [2.09094, 1.49761], [1.2526, 3.01513]],
];

/// Six-qubit, nine-setting direction set with orthonormal per-qubit triples,
/// available by the name `paper_table_a1`.
pub fn paper_table_a1() -> DirectionSet {
    let directions = (0..6).map(|q| ANGLES.iter().map(|row| BlochDirection::new(row[q][0], row[q][1])).collect()).collect();
    DirectionSet::new(directions).expect("rectangular table")
}

/// Per-qubit partitions of the nine settings into orthonormal triples
/// (0-based setting indices).
pub fn table_a1_partitions() -> Vec<Vec<[usize; 3]>> {
    let one_based: [[[usize; 3]; 3]; 6] = [
        [[1, 2, 3], [4, 5, 6], [7, 8, 9]],
        [[1, 2, 5], [3, 4, 7], [6, 8, 9]],
        [[1, 2, 8], [3, 6, 7], [4, 5, 9]],
        [[1, 3, 4], [2, 8, 9], [5, 6, 7]],
        [[1, 5, 9], [2, 4, 7], [3, 6, 8]],
        [[1, 6, 7], [2, 4, 9], [3, 5, 8]],
    ];
    one_based.iter().map(|q| q.iter().map(|t| t.map(|i| i - 1)).collect()).collect()
}
