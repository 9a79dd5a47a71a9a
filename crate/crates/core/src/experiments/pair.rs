use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::config::{ActivationPair, Solver};
use crate::metrics::{cce_between_with, PointSet};
use crate::network::{empirical_gen_error, init_small, Activation, TrainConfig, TwoLayerNet};
use crate::seed::{self, CellSeeds, Stream};
use crate::teacher::{sample_dataset, sample_inputs, sample_teacher, RegressionDataset, TeacherConfig};
use crate::theory::v_star_oracle;
use crate::{Execution, Result};

/// Everything needed to run one replicate of one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    pub d: usize,
    pub k: usize,
    pub n: usize,
    pub snr: f64,
    pub sigma_w2: f64,
    pub pair: ActivationPair,
    pub solver: Solver,
    pub n_test: usize,
    pub n_cce: usize,
    pub train: TrainConfig,
    pub same_dataset: bool,
}

/// Outcome of one replicate: alignment in both directions and the test error
/// of each student.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Replicate {
    pub cce_ab: f64,
    pub cce_ba: f64,
    pub ii_ab: f64,
    pub ii_ba: f64,
    pub gen_err_a: f64,
    pub gen_err_b: f64,
    pub steps_a: usize,
    pub steps_b: usize,
    pub converged: bool,
}

/// Fits one student: the closed-form global minimum for linear students under
/// [`Solver::Oracle`], gradient descent from small initialization otherwise.
pub fn solve_network(
    activation: Activation,
    solver: Solver,
    k: usize,
    data: &RegressionDataset,
    train: &TrainConfig,
    seed: u64,
) -> Result<(TwoLayerNet, usize, bool)> {
    if activation == Activation::Linear && solver == Solver::Oracle {
        let sol = v_star_oracle(data)?;
        return Ok((TwoLayerNet::rank_one(&sol.total_map(), k, seed)?, 0, true));
    }
    let mut net = init_small(data.d(), k, activation, train.init_scale, seed)?;
    let report = net.train_full_batch(data, train)?;
    Ok((net, report.steps, report.converged))
}

pub fn run_pair(cell: &CellSpec, seeds: &CellSeeds) -> Result<Replicate> {
    let tc = TeacherConfig::from_snr(cell.d, cell.sigma_w2, cell.snr)?;
    let teacher = sample_teacher(tc, seeds.stream(Stream::Teacher))?;
    let data_a = sample_dataset(&teacher, cell.n, seeds.stream(Stream::DatasetA))?;
    let data_b = if cell.pair.shares_dataset() || cell.same_dataset {
        data_a.clone()
    } else {
        sample_dataset(&teacher, cell.n, seeds.stream(Stream::DatasetB))?
    };
    let (act_a, act_b) = cell.pair.activations();
    let (net_a, steps_a, conv_a) =
        solve_network(act_a, cell.solver, cell.k, &data_a, &cell.train, seeds.stream(Stream::InitA))?;
    let (net_b, steps_b, conv_b) =
        solve_network(act_b, cell.solver, cell.k, &data_b, &cell.train, seeds.stream(Stream::InitB))?;

    let x_test = sample_inputs(cell.d, cell.n_test, seeds.stream(Stream::TestSet));
    let gen_err_a = empirical_gen_error(&net_a, &teacher, &x_test)?;
    let gen_err_b = empirical_gen_error(&net_b, &teacher, &x_test)?;

    let mut rng = seed::rng(seeds.stream(Stream::Subsample));
    let mut idx = index::sample(&mut rng, cell.n_test, cell.n_cce).into_vec();
    idx.sort_unstable();
    let x_cce = x_test.select(ndarray::Axis(0), &idx);
    let ha = PointSet::new(net_a.hidden(&x_cce)?)?;
    let hb = PointSet::new(net_b.hidden(&x_cce)?)?;
    // cells already run in parallel; keep the inner loop sequential
    let score = cce_between_with(&ha, &hb, None, 0, Execution::Sequential)?;

    Ok(Replicate {
        cce_ab: score.cce_ab,
        cce_ba: score.cce_ba,
        ii_ab: score.ii_ab,
        ii_ba: score.ii_ba,
        gen_err_a,
        gen_err_b,
        steps_a,
        steps_b,
        converged: conv_a && conv_b,
    })
}
