"""Maximum-likelihood reconstruction from tomography counts.

A reconstruction model pairs each circuit with effective measurement
operators computed from assumed preparation and readout (ideal by
default, or any DiagonalSpamModel).  States are fitted by a diluted
fixed-point iteration, processes by projected gradient ascent on the
Choi matrix, and SPAM calibration parameters by a genetic search over
the likelihood followed by a local polish.

The calibration likelihood is invariant under `readout.gauge_transform`:
moving a depolarizing factor between preparation and readout changes no
circuit probability, so fitted diagonal models are only determined up to
that gauge.  The thermally constrained fit does not share the flat
direction, which is what makes it useful.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.optimize
import scipy.stats

from . import qcore, readout
from .circuits import gate_unitary, sequence_unitary

PROB_FLOOR = 1e-12


@dataclass
class FitReport:
    """Outcome of one maximum-likelihood fit.

    `estimate` is the fitted object: a density matrix, a Choi matrix, a
    DiagonalSpamModel, or a parameter dict, depending on the fitter.
    `max_residual` is the largest |model probability - observed frequency|
    over circuits that received shots.
    """

    estimate: object
    log_likelihood: float
    iterations: int
    converged: bool
    max_residual: float
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "estimate": _jsonify(self.estimate),
            "log_likelihood": self.log_likelihood,
            "iterations": self.iterations,
            "converged": self.converged,
            "max_residual": self.max_residual,
            "diagnostics": _jsonify(self.diagnostics),
        }


def _jsonify(obj):
    if isinstance(obj, readout.DiagonalSpamModel):
        return obj.to_dict()
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return {"re": obj.real.tolist(), "im": obj.imag.tolist()}
        return obj.tolist()
    if isinstance(obj, dict):
        return {k: _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


@dataclass(frozen=True)
class MeasurementModel:
    """Effective measurement operators of a protocol under assumed SPAM.

    `operators` is stacked (n_circuits, n_outcomes, D, D): for state
    tomography D = d and probabilities are Tr(rho B_ik); for process
    tomography D = d^2, the operators are rho_i^T (x) P_ik, and
    probabilities are Tr(J A_ik) for the Choi matrix J.
    """

    kind: str
    dim: int
    labels: tuple
    operators: np.ndarray

    @property
    def n_circuits(self):
        return len(self.labels)

    @property
    def n_outcomes(self):
        return self.operators.shape[1]

    def probabilities(self, x):
        """Outcome probability table (n_circuits, n_outcomes) for state or Choi x."""
        return np.real(np.einsum("ckij,ji->ck", self.operators, x))


def build_measurement_model(protocol, spam=None, gate_depol_p=0.0,
                            fold_gate_noise=False):
    """Effective operators of `protocol` under an assumed SPAM model.

    `spam` is a DiagonalSpamModel or None for ideal preparation/readout.
    With `fold_gate_noise`, a depolarizing factor `gate_depol_p` is folded
    into the operators after every gate; by default gates are taken ideal
    and only SPAM enters the model.
    """
    dim = protocol.dim
    model = readout.ideal_spam_model(dim) if spam is None else spam
    if model.dim != dim:
        raise ValueError(f"SPAM dimension {model.dim} != protocol dimension {dim}")
    if fold_gate_noise and not 0.0 <= gate_depol_p <= 1.0:
        raise ValueError(f"gate_depol_p must lie in [0, 1], got {gate_depol_p}")
    rho0 = model.initial_state()
    povm = model.povm()
    n_out = povm.shape[0]
    dd = dim if protocol.kind == "qst" else dim * dim
    ops = np.zeros((len(protocol.circuits), n_out, dd, dd), dtype=complex)
    for c, circuit in enumerate(protocol.circuits):
        if fold_gate_noise:
            effects = list(povm)
            for g in reversed(circuit.meas.gates):
                u = gate_unitary(g, dim)
                effects = [qcore.dagger(u) @ qcore.depolarize(p, gate_depol_p) @ u
                           for p in effects]
        else:
            mu = sequence_unitary(circuit.meas)
            effects = [qcore.dagger(mu) @ p @ mu for p in povm]
        if protocol.kind == "qst":
            if len(circuit.prep):
                raise ValueError(
                    f"state-tomography circuit {circuit.label!r} has prep gates")
            ops[c] = np.stack(effects)
        else:
            if fold_gate_noise:
                rho_i = rho0
                for g in circuit.prep.gates:
                    u = gate_unitary(g, dim)
                    rho_i = qcore.depolarize(u @ rho_i @ qcore.dagger(u), gate_depol_p)
            else:
                pu = sequence_unitary(circuit.prep)
                rho_i = pu @ rho0 @ qcore.dagger(pu)
            ops[c] = np.stack([np.kron(rho_i.T, e) for e in effects])
    labels = tuple(c.label for c in protocol.circuits)
    return MeasurementModel(protocol.kind, dim, labels, ops)


def _check_alignment(data, model):
    if tuple(data.labels) != tuple(model.labels):
        raise ValueError("dataset circuits do not match the model circuits")
    if data.counts.shape != (model.n_circuits, model.n_outcomes):
        raise ValueError(
            f"counts shape {data.counts.shape} does not match model "
            f"({model.n_circuits}, {model.n_outcomes})")
    if data.counts.sum() <= 0:
        raise ValueError("dataset contains no counts")


def _residual(probs, data):
    freq = data.frequencies()
    mask = data.shots > 0
    if not mask.any():
        return np.inf
    return float(np.max(np.abs(probs[mask] - freq[mask])))


def mle_state(data, model, dilution=0.1, tol=1e-10, max_iter=10000):
    """Maximum-likelihood state estimate by the diluted R rho R iteration.

    Iterates rho <- (1 - dilution) * N[R rho R] + dilution * rho with
    R = sum_ik (n_ik / p_ik) B_ik, which keeps the iterate a valid state.
    If a step would lower the log-likelihood the update is pulled toward
    the current iterate until it does not, so the likelihood trace is
    non-decreasing.  Stops when the gain drops below `tol` per shot.
    """
    if model.kind != "qst":
        raise ValueError(f"mle_state needs a 'qst' model, got {model.kind!r}")
    _check_alignment(data, model)
    dim = model.dim
    ops = model.operators.reshape(-1, dim, dim)
    counts = np.asarray(data.counts, dtype=float).ravel()
    n_total = counts.sum()

    def probs_of(rho):
        return np.clip(np.real(np.einsum("nij,ji->n", ops, rho)), PROB_FLOOR, None)

    rho = np.eye(dim, dtype=complex) / dim
    p = probs_of(rho)
    ll = float(counts @ np.log(p))
    trace = [ll]
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        r = np.einsum("n,nij->ij", counts / p, ops)
        r = (r + qcore.dagger(r)) / 2
        cand = r @ rho @ r
        cand = cand / np.trace(cand).real
        cand = (cand + qcore.dagger(cand)) / 2
        step = 1.0 - dilution
        rho_new = step * cand + (1.0 - step) * rho
        p_new = probs_of(rho_new)
        ll_new = float(counts @ np.log(p_new))
        while ll_new < ll and step > 1e-8:
            step /= 2.0
            rho_new = step * cand + (1.0 - step) * rho
            p_new = probs_of(rho_new)
            ll_new = float(counts @ np.log(p_new))
        if ll_new < ll:
            converged = True
            break
        gain = ll_new - ll
        rho, p, ll = rho_new, p_new, ll_new
        trace.append(ll)
        if gain < tol * max(n_total, 1.0):
            converged = True
            break
    probs = np.real(np.einsum("ckij,ji->ck", model.operators, rho))
    return FitReport(
        estimate=rho,
        log_likelihood=ll,
        iterations=iterations,
        converged=converged,
        max_residual=_residual(probs, data),
        diagnostics={"loglik_trace": np.asarray(trace)},
    )


def mle_state_pure(data, model, dilution=0.1, tol=1e-10, max_iter=10000):
    """Rank-1 restriction of `mle_state`: the estimate is a pure state.

    Iterates psi <- normalize((1 - dilution) * normalize(R psi)
    + dilution * psi), the vector form of the diluted fixed point, with
    the same pull-back safeguard and stopping rule as `mle_state`.  The
    start vector is the dominant eigenvector of R at the maximally mixed
    state; a poor local maximum only lowers this fit's likelihood, which
    `select_rank` treats as a vote for the full-rank fit.
    """
    if model.kind != "qst":
        raise ValueError(f"mle_state_pure needs a 'qst' model, got {model.kind!r}")
    _check_alignment(data, model)
    dim = model.dim
    ops = model.operators.reshape(-1, dim, dim)
    counts = np.asarray(data.counts, dtype=float).ravel()
    n_total = counts.sum()

    def probs_of(v):
        return np.clip(np.real(np.einsum("i,nij,j->n", v.conj(), ops, v)),
                       PROB_FLOOR, None)

    p0 = np.clip(np.real(np.einsum("nii->n", ops)) / dim, PROB_FLOOR, None)
    r0 = np.einsum("n,nij->ij", counts / p0, ops)
    _, vecs = np.linalg.eigh((r0 + qcore.dagger(r0)) / 2)
    psi = vecs[:, -1]
    p = probs_of(psi)
    ll = float(counts @ np.log(p))
    trace = [ll]
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        r = np.einsum("n,nij->ij", counts / p, ops)
        r = (r + qcore.dagger(r)) / 2
        cand = r @ psi
        cand = cand / np.linalg.norm(cand)
        step = 1.0 - dilution
        psi_new = step * cand + (1.0 - step) * psi
        psi_new = psi_new / np.linalg.norm(psi_new)
        p_new = probs_of(psi_new)
        ll_new = float(counts @ np.log(p_new))
        while ll_new < ll and step > 1e-8:
            step /= 2.0
            psi_new = step * cand + (1.0 - step) * psi
            psi_new = psi_new / np.linalg.norm(psi_new)
            p_new = probs_of(psi_new)
            ll_new = float(counts @ np.log(p_new))
        if ll_new < ll:
            converged = True
            break
        gain = ll_new - ll
        psi, p, ll = psi_new, p_new, ll_new
        trace.append(ll)
        if gain < tol * max(n_total, 1.0):
            converged = True
            break
    rho = np.outer(psi, psi.conj())
    probs = np.real(np.einsum("ckij,ji->ck", model.operators, rho))
    return FitReport(
        estimate=rho,
        log_likelihood=ll,
        iterations=iterations,
        converged=converged,
        max_residual=_residual(probs, data),
        diagnostics={"loglik_trace": np.asarray(trace), "state_vector": psi},
    )


def select_rank(full, pure, dim, significance=0.95):
    """Keep the pure-state fit unless the likelihood ratio rejects it.

    A full-rank density matrix has d^2 - 1 free real parameters and a
    pure state 2d - 2; twice the log-likelihood gap between the nested
    fits is asymptotically chi-squared with the difference as degrees of
    freedom.  Near-pure states at modest sample sizes are estimated much
    better by the restricted fit, which cannot spill weight onto
    spurious eigenvectors of the full-rank maximizer.
    """
    dof = (dim * dim - 1) - (2 * dim - 2)
    threshold = float(scipy.stats.chi2.ppf(significance, dof))
    if 2.0 * (full.log_likelihood - pure.log_likelihood) <= threshold:
        return pure
    return full


def project_psd(op):
    """Nearest positive semidefinite matrix (eigenvalue clipping)."""
    w, v = np.linalg.eigh((op + qcore.dagger(op)) / 2)
    return (v * np.clip(w, 0.0, None)) @ qcore.dagger(v)


def project_trace_preserving(choi):
    """Orthogonal projection onto Choi matrices with Tr_out = I."""
    d = int(round(np.sqrt(choi.shape[0])))
    delta = qcore.choi_output_trace(choi) - np.eye(d)
    return choi - np.kron(delta, np.eye(d)) / d


def project_cptp(choi, tol=1e-11, max_alternations=200):
    """Dykstra-corrected alternating projection onto the CPTP set."""
    x = (choi + qcore.dagger(choi)) / 2
    p_corr = np.zeros_like(x)
    q_corr = np.zeros_like(x)
    for _ in range(max_alternations):
        y = project_psd(x + p_corr)
        p_corr = x + p_corr - y
        x = project_trace_preserving(y + q_corr)
        q_corr = y + q_corr - x
        wmin = np.linalg.eigvalsh((x + qcore.dagger(x)) / 2).min()
        if wmin >= -tol:
            break
    return (x + qcore.dagger(x)) / 2


def mle_process(data, model, tol=1e-10, max_iter=10000):
    """Maximum-likelihood Choi-matrix estimate by projected gradient ascent.

    Ascends the log-likelihood sum_ik n_ik log Tr(J A_ik) with an adaptive
    step and backtracking; every iterate is pushed back onto the CPTP set
    with `project_cptp`.  Stops when no projected step improves the
    likelihood or the gain drops below `tol` per shot.
    """
    if model.kind != "qpt":
        raise ValueError(f"mle_process needs a 'qpt' model, got {model.kind!r}")
    _check_alignment(data, model)
    d2 = model.dim ** 2
    ops = model.operators.reshape(-1, d2, d2)
    counts = np.asarray(data.counts, dtype=float).ravel()
    n_total = counts.sum()

    def probs_of(j):
        return np.clip(np.real(np.einsum("nij,ji->n", ops, j)), PROB_FLOOR, None)

    choi = np.eye(d2, dtype=complex) / model.dim
    p = probs_of(choi)
    ll = float(counts @ np.log(p))
    gamma = 0.3
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        grad = np.einsum("n,nij->ij", counts / p, ops) / max(n_total, 1.0)
        grad = (grad + qcore.dagger(grad)) / 2
        accepted = False
        first_try = True
        while gamma >= 1e-12:
            cand = project_cptp(choi + gamma * grad)
            p_new = probs_of(cand)
            ll_new = float(counts @ np.log(p_new))
            if ll_new > ll:
                accepted = True
                if first_try:
                    gamma = min(gamma * 1.6, 64.0)
                break
            gamma /= 2.0
            first_try = False
        if not accepted:
            converged = True
            break
        gain = ll_new - ll
        choi, p, ll = cand, p_new, ll_new
        if gain < tol * max(n_total, 1.0):
            converged = True
            break
    choi = project_cptp(choi, tol=1e-12, max_alternations=1000)
    probs = np.real(np.einsum("ckij,ji->ck", model.operators, choi))
    return FitReport(
        estimate=choi,
        log_likelihood=ll,
        iterations=iterations,
        converged=converged,
        max_residual=_residual(probs, data),
        diagnostics={"final_step": gamma},
    )


@dataclass(frozen=True)
class OptimizerConfig:
    """Genetic-search settings.

    Mutation is Gaussian with width mutation_scale * (box width), annealed
    geometrically down to mutation_floor times the initial width over the
    generation budget.  `tol` > 0 stops a restart early when the best
    objective has not improved by more than tol for `patience` generations.
    """

    population: int = 60
    generations: int = 300
    elite_frac: float = 0.1
    mutation_scale: float = 0.1
    mutation_floor: float = 1e-3
    blend_alpha: float = 0.5
    tournament: int = 3
    restarts: int = 5
    seed: int = 0
    tol: float = 0.0
    patience: int = 50

    def __post_init__(self):
        if self.population < 2 or self.generations < 1 or self.restarts < 1:
            raise ValueError("population, generations and restarts must be positive")
        if not 0.0 <= self.elite_frac < 1.0:
            raise ValueError(f"elite_frac must lie in [0, 1), got {self.elite_frac}")


def genetic_optimize(objective, bounds, config=None):
    """Maximize `objective` over a box by a seeded genetic search.

    Tournament selection, blend crossover, annealed Gaussian mutation and
    elitism, restarted `config.restarts` times from independent child
    streams.  Deterministic in (objective, bounds, config).  Returns
    (best_x, best_value) of the best candidate ever evaluated.
    """
    config = config or OptimizerConfig()
    bounds = np.asarray(bounds, dtype=float)
    if bounds.ndim != 2 or bounds.shape[1] != 2:
        raise ValueError(f"bounds must be (n, 2), got shape {bounds.shape}")
    lo, hi = bounds[:, 0], bounds[:, 1]
    if not np.all(np.isfinite(bounds)) or np.any(lo >= hi):
        raise ValueError("bounds must be finite with lower < upper")
    ndim = bounds.shape[0]
    width = hi - lo
    n_elite = max(1, int(round(config.elite_frac * config.population)))
    best_x, best_f = None, -np.inf
    for restart in range(config.restarts):
        rng = qcore.make_rng(config.seed, "genetic-restart", restart)
        pop = lo + rng.uniform(size=(config.population, ndim)) * width
        fvals = np.array([objective(x) for x in pop])
        stall_best, stall = np.max(fvals), 0
        for gen in range(config.generations):
            order = np.argsort(fvals)[::-1]
            pop, fvals = pop[order], fvals[order]
            if fvals[0] > best_f:
                best_f, best_x = float(fvals[0]), pop[0].copy()
            if config.tol > 0:
                if fvals[0] > stall_best + config.tol:
                    stall_best, stall = fvals[0], 0
                else:
                    stall += 1
                    if stall >= config.patience:
                        break
            frac = gen / max(config.generations - 1, 1)
            sigma = config.mutation_scale * width * config.mutation_floor ** frac
            children = np.empty((config.population - n_elite, ndim))
            for i in range(children.shape[0]):
                picks = rng.integers(0, config.population, size=config.tournament)
                p1 = pop[picks[np.argmax(fvals[picks])]]
                picks = rng.integers(0, config.population, size=config.tournament)
                p2 = pop[picks[np.argmax(fvals[picks])]]
                c_lo = np.minimum(p1, p2) - config.blend_alpha * np.abs(p1 - p2)
                c_hi = np.maximum(p1, p2) + config.blend_alpha * np.abs(p1 - p2)
                children[i] = c_lo + rng.uniform(size=ndim) * (c_hi - c_lo)
            children += rng.standard_normal(children.shape) * sigma
            np.clip(children, lo, hi, out=children)
            child_f = np.array([objective(x) for x in children])
            pop = np.vstack([pop[:n_elite], children])
            fvals = np.concatenate([fvals[:n_elite], child_f])
        order = np.argmax(fvals)
        if fvals[order] > best_f:
            best_f, best_x = float(fvals[order]), pop[order].copy()
    return best_x, best_f


def _polish(objective, x0, bounds):
    """Local Nelder-Mead refinement of a genetic-search result."""
    res = scipy.optimize.minimize(
        lambda x: -objective(x), x0, method="Nelder-Mead", bounds=bounds,
        options={"xatol": 1e-9, "fatol": 1e-9, "maxiter": 4000, "maxfev": 8000})
    return res.x, -res.fun


def _softmax(z):
    w = np.exp(z - z.max())
    return w / w.sum()


def estimate_spam_general(data, gate_depol_p=0.0, config=None):
    """Fit the full diagonal preparation-and-readout model to calibration counts.

    `data` holds counts of the `spam_calibration_circuits` family: circuit
    0 is gate free, circuit j applies one R_x(pi) on levels (0, j), which
    on a diagonal state just swaps populations 0 <-> j.  Populations and
    response columns are parametrized through softmax, so every candidate
    is a valid model; the likelihood is maximized by `genetic_optimize`
    plus a local polish.  The result is gauge-ambiguous (see module notes):
    only its predicted probabilities are identified, not (a, B) themselves.
    """
    counts = np.asarray(data.counts, dtype=float)
    dim = counts.shape[1]
    if counts.shape[0] != dim:
        raise ValueError(
            f"expected {dim} calibration circuits, got {counts.shape[0]}")
    if counts.sum() <= 0:
        raise ValueError("dataset contains no counts")
    if not 0.0 <= gate_depol_p <= 1.0:
        raise ValueError(f"gate_depol_p must lie in [0, 1], got {gate_depol_p}")

    swaps = []
    for j in range(dim):
        perm = np.arange(dim)
        if j > 0:
            perm[[0, j]] = perm[[j, 0]]
        swaps.append(perm)

    def model_probs(theta):
        a = _softmax(theta[:dim])
        b = np.apply_along_axis(_softmax, 0, theta[dim:].reshape(dim, dim))
        rows = np.empty((dim, dim))
        for j in range(dim):
            v = a[swaps[j]]
            if j > 0 and gate_depol_p:
                v = (1.0 - gate_depol_p) * v + gate_depol_p / dim
            rows[j] = b @ v
        return rows, a, b

    def objective(theta):
        rows, _, _ = model_probs(theta)
        return float(np.sum(counts * np.log(np.clip(rows, PROB_FLOOR, None))))

    bounds = np.tile([-8.0, 8.0], (dim + dim * dim, 1))
    cfg = config or OptimizerConfig()
    x_best, _ = genetic_optimize(objective, bounds, cfg)
    x_best, ll = _polish(objective, x_best, bounds)
    probs, a, b = model_probs(x_best)
    model = readout.DiagonalSpamModel(a, b)
    report = FitReport(
        estimate=model,
        log_likelihood=ll,
        iterations=cfg.restarts * cfg.generations,
        converged=True,
        max_residual=_residual(probs, data),
        diagnostics={"predicted_probs": probs},
    )
    return report


def estimate_spam_gibbs(data, omegas, config=None):
    """Fit the thermal readout model (T, b0, b1) to single-level read counts.

    `data` holds binary counts (no-click, click) per level from
    `simulate_level_reads`; the click probability of level j is
    (1 - b0) a_j + b1 (1 - a_j) with thermal populations a(T).  Unlike the
    general diagonal fit this three-parameter family has no gauge freedom.
    """
    counts = np.asarray(data.counts, dtype=float)
    omegas = np.asarray(omegas, dtype=float)
    dim = omegas.size
    if counts.shape != (dim, 2):
        raise ValueError(
            f"expected binary counts for {dim} levels, got shape {counts.shape}")
    if counts.sum() <= 0:
        raise ValueError("dataset contains no counts")

    def click_probs(theta):
        temp, b0, b1 = theta
        a = readout.gibbs_populations(temp, omegas)
        return (1.0 - b0) * a + b1 * (1.0 - a)

    def objective(theta):
        p = np.clip(click_probs(theta), PROB_FLOOR, 1.0 - PROB_FLOOR)
        return float(np.sum(counts[:, 1] * np.log(p) + counts[:, 0] * np.log1p(-p)))

    bounds = np.array([[1e-6, 100.0], [0.0, 0.5], [0.0, 0.5]])
    cfg = config or OptimizerConfig()
    x_best, _ = genetic_optimize(objective, bounds, cfg)
    x_best, ll = _polish(objective, x_best, bounds)
    temp, b0, b1 = (float(v) for v in x_best)
    p_fit = click_probs(x_best)
    freq = data.frequencies()[:, 1]
    mask = data.shots > 0
    report = FitReport(
        estimate={"temperature": temp, "b0": b0, "b1": b1},
        log_likelihood=ll,
        iterations=cfg.restarts * cfg.generations,
        converged=True,
        max_residual=float(np.max(np.abs(p_fit[mask] - freq[mask]))),
        diagnostics={"populations": readout.gibbs_populations(temp, omegas),
                     "predicted_click_probs": p_fit},
    )
    return report
