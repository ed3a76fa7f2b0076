//! Central finite-difference oracle for the tape autodiff.
//!
//! Each parameter element is nudged by ±h and the loss recomputed from
//! scratch; the analytic gradient from one backward pass must match. A
//! difference quotient whose interval straddles a ReLU kink is not a valid
//! oracle, so watched pre-activations are compared for sign changes and such
//! elements are reported separately instead of being scored.

#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use skyaug::gan::{ConvGeom, DiscriminatorNet, GanArch, GeneratorNet, Graph, NodeId, Parameters, Tensor};
use skyaug::Result;

pub const H: f64 = 1e-4;
pub const TOL: f64 = 1e-4;
const GEOM: ConvGeom = ConvGeom {
    kernel: 4,
    stride: 2,
    pad: 1,
};
/// Floor for the relative-error denominator so that near-zero gradients are
/// judged on absolute error.
pub const REL_FLOOR: f64 = 1e-4;

pub struct GradCheck {
    pub max_rel_err: f64,
    pub checked: usize,
    pub kink_skipped: usize,
}

/// `build(params)` records a scalar loss and returns the graph, the loss node
/// and the node of every parameter (same order as `params`).
pub fn check<F>(params: &[Tensor], watch: &[&str], build: F) -> Result<GradCheck>
where
    F: Fn(&[Tensor]) -> Result<(Graph, NodeId, Vec<NodeId>)>,
{
    let (g, loss, ids) = build(params)?;
    let grads = g.backward(loss)?;
    let base_signs = signs(&g, watch);
    let mut out = GradCheck {
        max_rel_err: 0.0,
        checked: 0,
        kink_skipped: 0,
    };
    for (pi, t) in params.iter().enumerate() {
        let analytic = grads.get(ids[pi]).map(|v| v.to_vec()).unwrap_or(vec![0.0; t.len()]);
        for e in 0..t.len() {
            let eval = |delta: f64| -> Result<(f64, Vec<bool>)> {
                let mut p = params.to_vec();
                p[pi].values[e] += delta;
                let (g, loss, _) = build(&p)?;
                Ok((g.value(loss)[0], signs(&g, watch)))
            };
            let (lp, sp) = eval(H)?;
            let (lm, sm) = eval(-H)?;
            if sp != base_signs || sm != base_signs {
                out.kink_skipped += 1;
                continue;
            }
            let numeric = (lp - lm) / (2.0 * H);
            let a = analytic[e];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_FLOOR);
            out.max_rel_err = out.max_rel_err.max(rel);
            out.checked += 1;
        }
    }
    Ok(out)
}

fn signs(g: &Graph, watch: &[&str]) -> Vec<bool> {
    watch
        .iter()
        .filter_map(|l| g.find(l))
        .flat_map(|id| g.value(id).iter().map(|v| *v > 0.0))
        .collect()
}

/// Tensor of independent N(0, scale²) draws.
pub fn random_tensor(shape: Vec<usize>, scale: f64, rng: &mut impl rand::Rng) -> Tensor {
    Tensor::from_fn(shape, || scale * rng.sample::<f64, _>(rand_distr::StandardNormal))
}

/// Projects a tensor-valued output onto fixed random coefficients so any
/// layer can be checked through a scalar loss.
pub fn project(g: &mut Graph, out: NodeId, coeffs: &[f64]) -> Result<NodeId> {
    let shape = g.shape(out).to_vec();
    let c = g.input("proj.c", shape, coeffs.to_vec())?;
    let m = g.mul("proj.mul", out, c)?;
    g.sum("proj.sum", m)
}

/// Checks one layer for one seed: params are random N(0, 1) tensors of
/// `shapes`, the output is projected onto fixed random coefficients.
pub fn layer_case(
    seed: u64,
    shapes: &[Vec<usize>],
    watch: &[&str],
    layer: impl Fn(&mut Graph, &[NodeId]) -> Result<NodeId>,
) -> GradCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params: Vec<Tensor> = shapes.iter().map(|s| random_tensor(s.clone(), 1.0, &mut rng)).collect();
    let coeffs = std::cell::RefCell::new(None::<Vec<f64>>);
    check(&params, watch, |p| {
        let mut g = Graph::new();
        let ids: Vec<_> = p
            .iter()
            .enumerate()
            .map(|(i, t)| g.variable(&format!("p{i}"), t.shape().to_vec(), t.values.clone()))
            .collect::<Result<_>>()?;
        let out = layer(&mut g, &ids)?;
        let n = g.value(out).len();
        let c = coeffs
            .borrow_mut()
            .get_or_insert_with(|| random_tensor(vec![n], 1.0, &mut ChaCha8Rng::seed_from_u64(1000 + seed)).values)
            .clone();
        let loss = project(&mut g, out, &c)?;
        Ok((g, loss, ids))
    })
    .unwrap()
}

/// Every layer type, checked for one seed.
pub fn all_layer_cases(seed: u64) -> Vec<(&'static str, GradCheck)> {
    let s = vec![vec![2, 6]];
    let two = vec![vec![2, 6], vec![2, 6]];
    vec![
        ("dense", layer_case(seed, &[vec![3, 4], vec![4, 5], vec![5]], &[], |g, p| g.dense("out", p[0], p[1], p[2]))),
        (
            "conv2d",
            layer_case(seed, &[vec![2, 2, 4, 4], vec![3, 2, 4, 4], vec![3]], &[], |g, p| {
                g.conv2d("out", p[0], p[1], p[2], GEOM)
            }),
        ),
        (
            "conv_transpose2d",
            layer_case(seed, &[vec![2, 3, 2, 2], vec![3, 2, 4, 4], vec![2]], &[], |g, p| {
                g.conv_transpose2d("out", p[0], p[1], p[2], GEOM)
            }),
        ),
        ("relu", layer_case(seed, &s, &["p0"], |g, p| g.relu("out", p[0]))),
        ("leaky_relu", layer_case(seed, &s, &["p0"], |g, p| g.leaky_relu("out", p[0], 0.2))),
        ("tanh", layer_case(seed, &s, &[], |g, p| g.tanh("out", p[0]))),
        ("sigmoid", layer_case(seed, &s, &[], |g, p| g.sigmoid("out", p[0]))),
        ("reshape", layer_case(seed, &s, &[], |g, p| g.reshape("out", p[0], vec![3, 4]))),
        ("add", layer_case(seed, &two, &[], |g, p| g.add("out", p[0], p[1]))),
        ("mul", layer_case(seed, &two, &[], |g, p| g.mul("out", p[0], p[1]))),
        (
            "bce",
            layer_case(seed, &[vec![4, 1]], &[], |g, p| {
                let prob = g.sigmoid("prob", p[0])?;
                g.bce("out", prob, vec![1.0, 0.0, 1.0, 0.0])
            }),
        ),
    ]
}

/// Generator → discriminator → BCE with every parameter trainable.
pub fn composed_check(seed: u64) -> GradCheck {
    let arch = GanArch::with_channels(2, 4, 2, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gen = GeneratorNet::new(arch, &mut rng);
    let disc = DiscriminatorNet::new(arch, &mut rng);
    // rescale the tiny init so activations are O(1) and away from saturation
    let params: Vec<Tensor> = gen
        .params()
        .into_iter()
        .chain(disc.params())
        .map(|t| random_tensor(t.shape().to_vec(), 0.5, &mut rng))
        .collect();
    assert!(params.iter().map(|t| t.len()).sum::<usize>() <= 200);
    let z = random_tensor(vec![2, 2], 1.0, &mut rng).values;
    let watch = ["gen.dense", "gen.up1", "disc.down1", "disc.down2"];
    check(&params, &watch, |p| {
        let gen = GeneratorNet::from_tensors(p[..6].to_vec())?;
        let disc = DiscriminatorNet::from_tensors(p[6..].to_vec(), 2)?;
        let mut g = Graph::new();
        let zid = g.input("z", vec![2, 2], z.clone())?;
        let (img, mut ids) = gen.build(&mut g, zid, true)?;
        let (prob, dids) = disc.build(&mut g, img, true)?;
        ids.extend(dids);
        let loss = g.bce("loss", prob, vec![1.0, 0.0])?;
        Ok((g, loss, ids))
    })
    .unwrap()
}
