#![allow(dead_code)]

use llg_core::assembly::NodalField;
use llg_core::mesh::Mesh;
use llg_core::model::Magnetization;
use llg_core::vec3::Vec3;
use nalgebra::{DMatrix, Matrix3, Vector3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;
pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_unit(rng: &mut TestRng) -> Vec3 {
    loop {
        let v: Vec3 = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 0.1 && n <= 1.0 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

pub fn random_magnetization(n: usize, rng: &mut TestRng) -> Magnetization {
    Magnetization::new(NodalField::new((0..n).map(|_| random_unit(rng)).collect())).unwrap()
}

pub fn random_field(n: usize, rng: &mut TestRng) -> NodalField {
    NodalField::new(
        (0..n)
            .map(|_| {
                [
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                ]
            })
            .collect(),
    )
}

/// Dense mass and stiffness matrices of a 2D mesh, built by direct
/// quadrature: each basis function is recovered as an affine function by
/// solving a 3x3 interpolation system, and integrals use the edge-midpoint
/// rule, which is exact for quadratics.
pub fn dense_operators(mesh: &Mesh) -> (DMatrix<f64>, DMatrix<f64>) {
    assert_eq!(mesh.dim(), 2);
    let n = mesh.n_nodes();
    let mut mass = DMatrix::zeros(n, n);
    let mut stiff = DMatrix::zeros(n, n);
    for c in 0..mesh.n_cells() {
        let verts = mesh.cell(c);
        let p: Vec<[f64; 2]> = verts
            .iter()
            .map(|&v| [mesh.vertex(v)[0], mesh.vertex(v)[1]])
            .collect();
        let area = 0.5
            * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
                - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]))
                .abs();
        let vander = Matrix3::new(
            1.0, p[0][0], p[0][1], 1.0, p[1][0], p[1][1], 1.0, p[2][0], p[2][1],
        );
        let lu = vander.lu();
        // coefficients (a, b, c) of phi_k = a + b x + c y
        let coeffs: Vec<Vector3<f64>> = (0..3)
            .map(|k| {
                let mut e = Vector3::zeros();
                e[k] = 1.0;
                lu.solve(&e).unwrap()
            })
            .collect();
        let mids: Vec<[f64; 2]> = (0..3)
            .map(|k| {
                let (a, b) = (p[k], p[(k + 1) % 3]);
                [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]
            })
            .collect();
        let eval = |k: usize, x: [f64; 2]| coeffs[k][0] + coeffs[k][1] * x[0] + coeffs[k][2] * x[1];
        let nodes: Vec<usize> = verts.iter().map(|&v| mesh.node_of(v)).collect();
        for a in 0..3 {
            for b in 0..3 {
                let m: f64 =
                    mids.iter().map(|&x| eval(a, x) * eval(b, x)).sum::<f64>() * area / 3.0;
                let k = (coeffs[a][1] * coeffs[b][1] + coeffs[a][2] * coeffs[b][2]) * area;
                mass[(nodes[a], nodes[b])] += m;
                stiff[(nodes[a], nodes[b])] += k;
            }
        }
    }
    (mass, stiff)
}

/// Componentwise dense product.
pub fn dense_apply(matrix: &DMatrix<f64>, field: &[Vec3]) -> Vec<Vec3> {
    let n = field.len();
    (0..n)
        .map(|i| {
            let mut acc = [0.0; 3];
            for j in 0..n {
                for c in 0..3 {
                    acc[c] += matrix[(i, j)] * field[j][c];
                }
            }
            acc
        })
        .collect()
}

pub fn nv(v: Vec3) -> Vector3<f64> {
    Vector3::new(v[0], v[1], v[2])
}

/// Random non-uniform tensor grid on the unit square with a random diagonal
/// in every rectangle. Every triangle is right-angled, so the mesh is
/// nonobtuse; all four sides are periodically identified.
pub fn random_tensor_mesh(n: usize, spread: f64, seed: u64) -> Mesh {
    let mut rng = rng(seed);
    let mut axis = || {
        let gaps: Vec<f64> = (0..n)
            .map(|_| 1.0 + spread * rng.gen_range(-1.0..1.0))
            .collect();
        let total: f64 = gaps.iter().sum();
        let mut x = vec![0.0];
        let mut acc = 0.0;
        for g in &gaps[..n - 1] {
            acc += g / total;
            x.push(acc);
        }
        x.push(1.0);
        x
    };
    let xs = axis();
    let ys = axis();
    let stride = n + 1;
    let idx = |i: usize, j: usize| j * stride + i;
    let mut coords = Vec::new();
    for y in &ys {
        for x in &xs {
            coords.extend_from_slice(&[*x, *y]);
        }
    }
    let mut cells = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v01, v11) = (idx(i, j), idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1));
            if rng.gen_bool(0.5) {
                cells.extend_from_slice(&[v00, v10, v11, v00, v11, v01]);
            } else {
                cells.extend_from_slice(&[v00, v10, v01, v10, v11, v01]);
            }
        }
    }
    let mut pairs = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            if i == n || j == n {
                pairs.push((idx(i, j), idx(i % n, j % n)));
            }
        }
    }
    Mesh::new(2, coords, cells, &pairs).unwrap()
}
