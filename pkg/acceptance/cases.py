"""
Acceptance checks at desk scale. Slow cases train networks and are only
run on request (``main.py acceptance --include-slow``).
"""

import time
from typing import List, Sequence

import numpy as np

from acceptance.harness import CaseOutcome, harness
from acceptance.oracles import RegressionSid, all_orders, brute_force_od, brute_force_shd, dag_list
from datagen.generators import GenConfig, generate
from datagen.schema import Dag, Dataset
from diffcore.ops import numpy_ops
from diffcore.tape import param_gradient
from diffusion.trainer import TrainConfig, TrainedScoreModel, train
from ensemble.control import control_order
from ensemble.evidence import length_normalized_prior, rank_evidence, temperature_soften
from ensemble.members import stats_fn_for
from ensemble.priors import OraclePrior, UniformPrior
from ensemble.schema import ControlConfig, EvidenceKind
from ensemble.stats import EnsembleStats, ensemble_sigmas
from metrics.graph_metrics import order_divergence, shd, sid
from ordering.analytic import linear_gaussian_score, marginal_gaussian_score
from ordering.backends import backends_for_ensemble, evaluation_rows
from ordering.deciduous import deciduous_score
from ordering.ordering import order_all, random_order
from ordering.schema import CausalOrder, HessianDiagTable, OrderingConfig, ResidueSign
from scino.hyperparams import HyperParams
from scino.network import ScinoNetwork
from stein.estimator import SteinConfig, kernel_monitor, stein_hessian_diag
from stein.probing import probe_final_layer
from utils.seeding import substream

PARAM_FD_STEP = 1e-5
INPUT_FD_STEP = 1e-5
KINK_TOL = 1e-6
GRAD_FLOOR = 1e-3


def _relative_error(a, b, floor: float = GRAD_FLOOR) -> np.ndarray:
    a, b = np.asarray(a), np.asarray(b)
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)


def _smooth(fd_coarse, fd_fine) -> np.ndarray:
    """Central differences at h and h/2 agree unless the stencil straddles a ReLU kink"""
    return _relative_error(fd_coarse, fd_fine) < KINK_TOL


def _squared_error(ops, network, batch):
    t, x, target = batch
    diff = ops.sub(network.forward(ops, t, x, update_stats=False), target)
    return ops.div(ops.sum(ops.mul(diff, diff)), float(x.shape[0]))


# === DERIVATIVES ===


def _param_difference(network: ScinoNetwork, batch, name: str, idx: int, step: float) -> float:
    values = network.params[name].reshape(-1)
    original = values[idx]
    values[idx] = original + step
    up = float(_squared_error(numpy_ops, network, batch))
    values[idx] = original - step
    down = float(_squared_error(numpy_ops, network, batch))
    values[idx] = original
    return (up - down) / (2 * step)


def parameter_gradient_errors(network: ScinoNetwork, batch, n_coords: int, rng: np.random.Generator) -> np.ndarray:
    """Relative error of tape gradients against central differences at sampled smooth coordinates"""
    _, grads = param_gradient(network, _squared_error, batch)
    names = list(network.params)
    sizes = np.array([network.params[n].size for n in names])
    offsets = np.concatenate([[0], np.cumsum(sizes)])

    errors = []
    for flat in rng.permutation(sizes.sum()):
        k = int(np.searchsorted(offsets, flat, side="right") - 1)
        name, idx = names[k], int(flat - offsets[k])
        coarse = _param_difference(network, batch, name, idx, PARAM_FD_STEP)
        fine = _param_difference(network, batch, name, idx, PARAM_FD_STEP / 2)
        if not _smooth(coarse, fine):
            continue
        errors.append(_relative_error(grads[name].reshape(-1)[idx], fine))
        if len(errors) == n_coords:
            break
    return np.array(errors)


def _input_difference(fn, x: np.ndarray, coord: int, step: float) -> np.ndarray:
    e = np.zeros(x.shape[1])
    e[coord] = step
    return (fn(x + e) - fn(x - e)) / (2 * step)


def input_derivative_errors(network: ScinoNetwork, t: float, x: np.ndarray, n_coords: int, rng: np.random.Generator):
    """(first, second) relative errors of hyper-dual derivatives against central differences"""
    n_vars = x.shape[1]
    predict = lambda xx: network.predict(t, xx)
    first, second = [], []
    for a in range(n_vars):
        fd = [_input_difference(predict, x, a, h) for h in (INPUT_FD_STEP, INPUT_FD_STEP / 2)]
        d_a = lambda xx, a=a: network.forward_hyperdual(t, xx, a, a).d_a
        for b in range(n_vars):
            res = network.forward_hyperdual(t, x, a, b)
            keep = _smooth(*fd)
            first.append(_relative_error(res.d_a, fd[1])[keep])
            fd2 = [_input_difference(d_a, x, b, h) for h in (INPUT_FD_STEP, INPUT_FD_STEP / 2)]
            keep2 = _smooth(*fd2)
            second.append(_relative_error(res.d_ab, fd2[1])[keep2])
    first, second = np.concatenate(first), np.concatenate(second)
    pick_first = rng.choice(first.size, size=min(n_coords, first.size), replace=False)
    pick_second = rng.choice(second.size, size=min(n_coords, second.size), replace=False)
    return first[pick_first], second[pick_second]


@harness.register("AC1", "derivative correctness (tape and hyper-dual vs finite differences)", budget_s=60)
def check_derivatives(seed: int = 0, n_coords: int = 100) -> CaseOutcome:
    outcome = CaseOutcome()
    hp = HyperParams.desk(4, hidden=32, n_layers=2)
    network = ScinoNetwork.initialize(hp, substream(seed, "init")).eval()
    rng = substream(seed, "acceptance")
    x = rng.standard_normal((4, 4))
    batch = (0.3, x, rng.standard_normal((4, 4)))

    grad_err = parameter_gradient_errors(network, batch, n_coords, rng)
    first_err, second_err = input_derivative_errors(network, 0.3, x, n_coords, rng)
    outcome.metrics.update(
        max_grad_rel_err=float(grad_err.max()),
        max_first_rel_err=float(first_err.max()),
        max_second_rel_err=float(second_err.max()),
    )
    outcome.require(grad_err.max() < 1e-5, f"parameter gradient rel. error {grad_err.max():.2e} >= 1e-5")
    outcome.require(first_err.max() < 1e-4, f"first input derivative rel. error {first_err.max():.2e} >= 1e-4")
    outcome.require(second_err.max() < 1e-4, f"mixed second derivative rel. error {second_err.max():.2e} >= 1e-4")
    return outcome


# === STEIN ===

STEIN_COVARIANCE = np.array([[1.0, 1.0], [1.0, 2.0]])
STEIN_TRUTH = np.array([-2.0, -1.0])


@harness.register("AC2", "Stein Hessian diagonal on a correlated Gaussian", budget_s=60)
def check_stein_gaussian(n_seeds: int = 10, n_samples: int = 1000) -> CaseOutcome:
    outcome = CaseOutcome()
    hits = 0
    estimates = []
    for seed in range(n_seeds):
        rng = substream(seed, "stein-oracle")
        x = rng.multivariate_normal(np.zeros(2), STEIN_COVARIANCE, size=n_samples)
        estimate = stein_hessian_diag(x).mean(axis=0)
        estimates.append(estimate.round(4).tolist())
        hits += bool(np.all(np.abs(estimate - STEIN_TRUTH) <= 0.2 * np.abs(STEIN_TRUTH)))
    outcome.metrics.update(seeds_within_20pct=hits, estimates=estimates)
    outcome.require(hits >= int(np.ceil(0.9 * n_seeds)), f"only {hits}/{n_seeds} seeds within 20% of (-2, -1)")
    return outcome


# === DECIDUOUS ===


def linear_chain_cases():
    """(weights, removed leaves) pairs with non-nested removals"""
    chain2 = np.array([[0.0, 1.5], [0.0, 0.0]])
    chain3 = np.array([[0.0, 0.8, 0.0], [0.0, 0.0, -1.2], [0.0, 0.0, 0.0]])
    fork = np.array([[0.0, 1.1, -0.7], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    return [(chain2, [1]), (chain3, [2]), (fork, [1, 2])]


def deciduous_max_error(weights: np.ndarray, removed: List[int], sign: ResidueSign, x: np.ndarray) -> float:
    model = linear_gaussian_score(weights)
    keep = [j for j in range(weights.shape[0]) if j not in removed]
    truth = marginal_gaussian_score(weights, keep)(x)
    return float(np.max(np.abs(deciduous_score(model, x, removed, sign) - truth)))


@harness.register("AC3", "deciduous residue formula on linear-Gaussian chains", budget_s=10)
def check_deciduous_closed_form(seed: int = 0, n_points: int = 100) -> CaseOutcome:
    outcome = CaseOutcome()
    rng = substream(seed, "deciduous")
    for weights, removed in linear_chain_cases():
        x = 2.0 * rng.standard_normal((n_points, weights.shape[0]))
        good = deciduous_max_error(weights, removed, ResidueSign.CORRECTED, x)
        bad = deciduous_max_error(weights, removed, ResidueSign.PAPER, x)
        label = f"D={weights.shape[0]} removed={removed}"
        outcome.metrics[label] = {"corrected": good, "opposite": bad}
        outcome.require(good < 1e-9, f"{label}: corrected sign error {good:.2e}")
        outcome.require(bad > 1e-3, f"{label}: opposite sign unexpectedly matches ({bad:.2e})")
    return outcome


# === ORDERING ON TRAINED MODELS ===


def desk_train_config(seed: int, epochs: int = 30) -> TrainConfig:
    return TrainConfig(epochs=epochs, seed=seed)


@harness.register("AC4", "leaf identifiability on x2 = x1^2 + e", budget_s=300, slow=True)
def check_quadratic_leaf(n_seeds: int = 10, n_samples: int = 1000, epochs: int = 30) -> CaseOutcome:
    outcome = CaseOutcome()
    hits = 0
    for seed in range(n_seeds):
        rng = substream(seed, "quadratic")
        x1 = rng.standard_normal(n_samples)
        x2 = x1**2 + rng.standard_normal(n_samples)
        dataset = Dataset(np.column_stack([x1, x2]), ("x1", "x2"))
        model = train(dataset, HyperParams.desk(2, hidden=64, n_layers=2), desk_train_config(seed, epochs))
        result = order_all(dataset, OrderingConfig(max_eval_samples=500), model=model)
        hits += result.order.removal[0] == 1
    outcome.metrics["seeds_selecting_x2"] = hits
    outcome.require(hits >= int(np.ceil(0.9 * n_seeds)), f"x2 selected first in only {hits}/{n_seeds} seeds")
    return outcome


def er_fixture(seed: int, n_nodes: int, n_samples: int = 1000):
    return generate(GenConfig(n_nodes=n_nodes, n_samples=n_samples, seed=seed))


def random_baseline_od(dag: Dag, seed: int, draws: int = 100) -> float:
    rng = substream(seed, "baseline")
    return float(np.mean([order_divergence(random_order(dag.n_nodes, rng), dag) for _ in range(draws)]))


def er_order_divergences(n_nodes: int, n_graphs: int, n_samples: int, epochs: int):
    ods, baselines = [], []
    for seed in range(n_graphs):
        dag, dataset = er_fixture(seed, n_nodes, n_samples)
        model = train(dataset, HyperParams.desk(n_nodes), desk_train_config(seed, epochs))
        result = order_all(dataset, OrderingConfig(max_eval_samples=500), model=model)
        ods.append(order_divergence(CausalOrder(result.order.removal), dag))
        baselines.append(random_baseline_od(dag, seed))
    return np.array(ods, dtype=float), np.array(baselines)


@harness.register("AC5", "ER(d5) GP-ANM end-to-end order divergence", budget_s=1800, slow=True)
def check_er5(n_graphs: int = 10, n_samples: int = 1000, epochs: int = 30) -> CaseOutcome:
    outcome = CaseOutcome()
    ods, baselines = er_order_divergences(5, n_graphs, n_samples, epochs)
    outcome.metrics.update(mean_od=float(ods.mean()), od_std=float(ods.std()), random_mean_od=float(baselines.mean()))
    outcome.require(ods.mean() <= 2.5, f"mean OD {ods.mean():.2f} > 2.5")
    outcome.require(ods.mean() < baselines.mean(), f"mean OD {ods.mean():.2f} not below random {baselines.mean():.2f}")
    return outcome


@harness.register("AC6", "ER(d10) scaling check", budget_s=5400, slow=True)
def check_er10(n_graphs: int = 10, n_samples: int = 1000, epochs: int = 30) -> CaseOutcome:
    outcome = CaseOutcome()
    ods, baselines = er_order_divergences(10, n_graphs, n_samples, epochs)
    outcome.metrics.update(mean_od=float(ods.mean()), random_mean_od=float(baselines.mean()))
    outcome.require(ods.mean() <= 6.0, f"mean OD {ods.mean():.2f} > 6.0")
    outcome.require(3.0 * ods.mean() <= baselines.mean(), f"random baseline {baselines.mean():.2f} not 3x mean OD {ods.mean():.2f}")
    return outcome


# === METRICS ===


@harness.register("AC7", "OD/SHD/SID against definition-level enumeration (<= 4 nodes)", budget_s=300)
def check_metric_oracles(max_nodes: int = 4) -> CaseOutcome:
    outcome = CaseOutcome()
    oracle = RegressionSid(seed=0)
    mismatches = {"od": 0, "shd": 0, "sid": 0}
    counts = {"od": 0, "pairs": 0}
    for n_nodes, dags in enumerate(dag_list(max_nodes)):
        if not dags:
            continue
        orders = list(all_orders(n_nodes))
        for g in dags:
            for topological in orders:
                counts["od"] += 1
                got = order_divergence(CausalOrder.from_topological(topological), g)
                mismatches["od"] += got != brute_force_od(topological, g.adjacency)
            for g_hat in dags:
                counts["pairs"] += 1
                mismatches["shd"] += shd(g, g_hat) != brute_force_shd(g.adjacency, g_hat.adjacency)
                mismatches["sid"] += sid(g, g_hat) != oracle.sid(g, g_hat)
    outcome.metrics.update(order_pairs=counts["od"], graph_pairs=counts["pairs"], **{f"{k}_mismatches": v for k, v in mismatches.items()})
    for metric, count in mismatches.items():
        outcome.require(count == 0, f"{metric}: {count} mismatches against enumeration")
    return outcome


# === CONTROL ===


class TableBackend:
    """Seeded Hessian tables that depend only on (member, step, remaining)"""

    def __init__(self, member: int, n_rows: int = 64, seed: int = 0):
        self.member = member
        self.n_rows = n_rows
        self.seed = seed

    def table(self, step, remaining, removed) -> HessianDiagTable:
        nodes = sorted(remaining)
        rng = substream(self.seed, f"table-{step}-{'.'.join(map(str, nodes))}", self.member)
        spread = rng.uniform(0.1, 2.0, size=len(nodes))
        return HessianDiagTable(step, nodes, rng.standard_normal((self.n_rows, len(nodes))) * spread)


def oracle_leaf_sequence(dag: Dag) -> List[int]:
    remaining, removal = list(range(dag.n_nodes)), []
    while remaining:
        leaf = dag.leaves(remaining)[0]
        removal.append(leaf)
        remaining.remove(leaf)
    return removal


def unit_example_errors() -> List[str]:
    errors = []
    stats = EnsembleStats(np.array([[1.0, 2.0, 3.0], [2.0, 1.0, 3.0]]), (0, 1, 2))
    if not np.allclose(rank_evidence(stats), [0.450, 0.450, 0.100], atol=1e-3):
        errors.append(f"rank evidence {rank_evidence(stats)}")
    if not np.isclose(length_normalized_prior(np.log([0.5, 0.5]), 1.0), 0.5):
        errors.append("alpha=1 length normalization")
    if not np.isclose(length_normalized_prior(np.log([0.5, 0.5]), 0.5), 0.5 ** np.sqrt(2)):
        errors.append("alpha=0.5 length normalization")
    if not np.allclose(temperature_soften([0.9, 0.1], 1.0), [0.690, 0.310], atol=1e-3):
        errors.append("tau=1 softening")
    if not np.allclose(temperature_soften([0.9, 0.1, 0.3], 0.0), 1.0 / 3.0):
        errors.append("tau=0 softening is not uniform")
    return errors


@harness.register("AC8", "control algorithm properties", budget_s=30)
def check_control(n_fixtures: int = 5, n_members: int = 4) -> CaseOutcome:
    outcome = CaseOutcome()
    outcome.errors.extend(unit_example_errors())
    for seed in range(n_fixtures):
        dag, dataset = er_fixture(seed, 5, n_samples=20)
        names = dataset.names
        members = [TableBackend(m, seed=seed) for m in range(n_members)]
        stats_fn = stats_fn_for(members)

        for evidence in (EvidenceKind.RANK, EvidenceKind.CI):
            result = control_order(names, None, OraclePrior(dag), stats_fn, ControlConfig(evidence=evidence))
            outcome.require(
                result.order.removal == oracle_leaf_sequence(dag),
                f"seed {seed} {evidence.value}: oracle prior gave {result.order.removal}",
            )
            frame = result.log_frame()
            sums = frame.groupby("step")["posterior"].sum().to_numpy()
            outcome.require(np.all(np.abs(sums - 1.0) < 1e-12), f"seed {seed}: posterior rows do not sum to 1")

        single = stats_fn_for(members[:1])
        baseline = order_all(dataset, OrderingConfig(), backend=members[0])
        for context in (None, ()):
            result = control_order(names, context, UniformPrior(), single, ControlConfig())
            outcome.require(
                result.order.removal == baseline.order.removal,
                f"seed {seed} context={context}: uniform prior {result.order.removal} vs evidence-only {baseline.order.removal}",
            )
    return outcome


# === PROBING COMPLEXITY ===


def _untrained_model(n_vars: int, dataset: Dataset, seed: int) -> TrainedScoreModel:
    hp = HyperParams.desk(n_vars, hidden=32, n_layers=2)
    network = ScinoNetwork.initialize(hp, substream(seed, "init")).eval()
    mean, std = dataset.column_stats()
    return TrainedScoreModel(network, TrainConfig().schedule(), mean, std)


def time_probe(n_samples: int, batch_size: int, steps: int, seed: int = 0, repeats: int = 2):
    rng = substream(seed, "probe-data")
    dataset = Dataset(rng.standard_normal((n_samples, 5)))
    model = _untrained_model(5, dataset, seed)
    cfg = TrainConfig(batch_size=batch_size, seed=seed)
    timings = []
    with kernel_monitor.watch() as monitor:
        for _ in range(repeats):
            start = time.perf_counter()
            probe_final_layer(model, [0, 1, 2], dataset, cfg, steps=steps)
            timings.append(time.perf_counter() - start)
    return min(timings), monitor.largest_side


@harness.register("AC9", "probing cost independent of N", budget_s=600, slow=True)
def check_probing_complexity(n_samples: int = 100_000, batch_size: int = 256, steps: int = 20) -> CaseOutcome:
    outcome = CaseOutcome()
    t_small, side_small = time_probe(n_samples, batch_size, steps)
    t_large, side_large = time_probe(2 * n_samples, batch_size, steps)
    ratio = t_large / t_small
    outcome.metrics.update(time_n=round(t_small, 3), time_2n=round(t_large, 3), ratio=round(ratio, 3),
                           largest_kernel_side=max(side_small, side_large))
    outcome.require(max(side_small, side_large) <= batch_size, "a kernel larger than the batch was built")
    outcome.require(ratio <= 1.5, f"time grew {ratio:.2f}x when N doubled")
    return outcome


# === ENSEMBLE EVIDENCE ===


def first_step_leaf_hits(n_graphs: int, n_members: int, n_samples: int, epochs: int, probe_steps: int) -> Sequence[bool]:
    hits = []
    for seed in range(n_graphs):
        dag, dataset = er_fixture(seed, 5, n_samples)
        cfg = TrainConfig(epochs=epochs, seed=seed, probe_steps=probe_steps)
        pretrained = train(dataset, HyperParams.desk(5), cfg)
        x_eval = evaluation_rows(dataset.values, 500, seed)
        members = backends_for_ensemble(pretrained, dataset, cfg, SteinConfig(), n_members, x_eval)
        stats = ensemble_sigmas(members, range(5))
        top = stats.nodes[int(np.argmax(rank_evidence(stats)))]
        hits.append(top in dag.leaves())
    return hits


@harness.register("AC10", "ensemble rank evidence ranks a true leaf first", budget_s=1200, slow=True)
def check_ensemble_evidence(n_graphs: int = 10, n_members: int = 8, n_samples: int = 1000, epochs: int = 30) -> CaseOutcome:
    outcome = CaseOutcome()
    hits = first_step_leaf_hits(n_graphs, n_members, n_samples, epochs, probe_steps=200)
    rate = float(np.mean(hits))
    outcome.metrics["top1_leaf_rate"] = rate
    outcome.require(rate >= 0.7, f"true leaf ranked first in only {rate:.0%} of decisions")
    return outcome
