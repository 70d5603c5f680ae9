"""Experiment driver: resolved configs, convergence tables, CSV reports.

Each operation walks a chain of finite quotients (or just the group-ring
element for the walk-based estimators), collects one row per quotient or per
window entry, and renders a CSV whose header block records the fully resolved
configuration.  Reruns with the same config and seed are byte-identical: all
randomness flows through counter-based streams and floats are formatted with
a fixed precision.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import (
    GroupForestsError,
    IdentityMismatchError,
    ResourceLimitError,
    UnsupportedFamilyError,
    WindowError,
)
from .forests import (
    QuotientMultigraph,
    degree_statistics,
    lift_marginals,
    rng_stream,
    wilson_sample,
)
from .groups import (
    FiniteQuotient,
    GroupFamily,
    QuotientChain,
    format_word,
    free_ball_quotient,
    injectivity_radius,
    word_ball,
)
from .intmat import smith_with_transform
from .linalg import (
    build_laplacian,
    fk_estimate_eigen,
    fk_estimate_tree,
    free_abelian_spectrum,
    harmonic_component_group,
    spanning_tree_count,
    spectrum,
)
from .walks import (
    formal_inverse_residual,
    format_group_ring,
    green_truncation,
    homoclinic_point,
    laplacian_element,
    parse_group_ring,
    require_well_balanced,
    spectral_radius_probe,
    tree_entropy,
)

OPERATIONS = (
    "identity",
    "tree-entropy",
    "fk-det",
    "sample-ust",
    "wsf-marginals",
    "green",
    "homoclinic",
    "spectral-radius",
    "window-density",
)

# operations that act on a quotient chain rather than on f alone
CHAIN_OPERATIONS = frozenset(
    {"identity", "fk-det", "sample-ust", "wsf-marginals", "window-density"}
)

DEFAULT_CAPS = {
    "max_support": 200000,
    "max_grid_cells": 1 << 22,
    "max_dense": 4096,
    "max_enumerate": 20000,
    "max_steps": 0,
    "probes": 64,
}

OP_DEFAULTS = {
    "identity": {"K": 80, "kappa": 0.0},
    "tree-entropy": {"K": 400},
    "fk-det": {"kappa": 0.0},
    "sample-ust": {"samples": 10, "root": 0},
    "wsf-marginals": {"samples": 2000, "radius": 1},
    "green": {"K": 60, "radius": 2},
    "homoclinic": {"K": 60, "radius": 1},
    "spectral-radius": {"k_max": 200, "tol": 0.05},
    "window-density": {"radius": 1},
}


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".12g")
    return str(v)


def parse_family(text: str) -> GroupFamily:
    """Family spec: 'free-abelian:d', 'free:r', or 'heisenberg'."""
    spec = text.strip().lower().replace("_", "-")
    if spec == "heisenberg":
        return GroupFamily.heisenberg()
    kind, sep, rank_text = spec.partition(":")
    if not sep:
        raise ValueError(f"family spec {text!r} needs 'kind:rank' (or 'heisenberg')")
    try:
        rank = int(rank_text)
    except ValueError:
        raise ValueError(f"family rank {rank_text!r} is not an integer") from None
    if kind == "free-abelian":
        return GroupFamily.free_abelian(rank)
    if kind == "free":
        return GroupFamily.free(rank)
    raise ValueError(f"unknown family kind {kind!r}")


def family_spec(family: GroupFamily) -> str:
    if family.kind == "heisenberg":
        return "heisenberg"
    return f"{family.kind}:{family.rank}"


def parse_moduli(text: str) -> list:
    """Quotient moduli: semicolon-separated quotients, comma-separated ints."""
    out = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        out.append(tuple(int(tok) for tok in part.replace("x", ",").split(",")))
    if not out:
        raise ValueError("empty moduli spec")
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved parameters for one run; construct via resolve_config."""

    operation: str
    family: GroupFamily
    f: "GroupRingElement"
    quotients: tuple = ()
    injectivity_radii: tuple = ()
    K: int = 80
    kappa: float = 0.0
    samples: int = 1000
    radius: int = 1
    k_max: int = 200
    tol: float = 0.05
    root: int = 0
    h: "GroupRingElement | None" = None
    seed: int = 0
    threads: int = 1
    engine: str = "auto"
    out: "str | None" = None
    caps: dict = field(default_factory=dict)

    def cap(self, name: str) -> int:
        return int(self.caps.get(name, DEFAULT_CAPS[name]))

    def header_lines(self) -> tuple:
        f_line = format_group_ring(self.f).strip().replace("\n", "; ")
        lines = [
            f"operation: {self.operation}",
            f"family: {family_spec(self.family)}",
            f"f: {f_line}",
        ]
        if self.h is not None:
            lines.append(f"h: {format_group_ring(self.h).strip().replace(chr(10), '; ')}")
        if self.quotients:
            quots = "; ".join(f"{q.label or 'quotient'} (N={q.size})" for q in self.quotients)
            lines.append(f"quotients: {quots}")
            lines.append(f"injectivity_radii: {list(self.injectivity_radii)}")
        lines += [
            f"K: {self.K}",
            f"kappa: {_fmt(self.kappa)}",
            f"samples: {self.samples}",
            f"radius: {self.radius}",
            f"k_max: {self.k_max}",
            f"tol: {_fmt(self.tol)}",
            f"root: {self.root}",
            f"seed: {self.seed}",
            f"threads: {self.threads}",
            f"engine: {self.engine}",
            "caps: " + " ".join(f"{k}={self.cap(k)}" for k in sorted(DEFAULT_CAPS)),
        ]
        return tuple(lines)


def resolve_config(
    operation: str,
    family: str = "free-abelian:1",
    f: str | None = None,
    moduli: str | None = None,
    quotient_files: tuple = (),
    ball_radii: tuple = (),
    h: str | None = None,
    **params,
) -> ExperimentConfig:
    """Validate and freeze a run configuration.

    f must be well-balanced and the quotient chain must have non-decreasing
    injectivity radii; both are checked here, before any computation.
    """
    if operation not in OPERATIONS:
        raise ValueError(f"unknown operation {operation!r}")
    fam = parse_family(family)
    elem = laplacian_element(fam) if f is None else parse_group_ring(fam, f)
    require_well_balanced(elem)
    h_elem = parse_group_ring(fam, h) if h is not None else None

    quotients = []
    if moduli:
        for mods in parse_moduli(moduli):
            quotients.append(FiniteQuotient.from_moduli(fam, mods))
    for path in quotient_files:
        with open(path) as fh:
            quotients.append(FiniteQuotient.from_text(fam, fh.read(), label=str(path)))
    seed = int(params.get("seed", 0) or 0)
    for r in ball_radii:
        quotients.append(free_ball_quotient(fam, int(r), seed=seed))
    radii = ()
    if quotients:
        chain = QuotientChain(quotients)
        radii = tuple(chain.radii)
    elif operation in CHAIN_OPERATIONS:
        raise ValueError(f"operation {operation!r} needs at least one quotient")

    fields = dict(OP_DEFAULTS.get(operation, {}))
    caps = dict(params.pop("caps", {}) or {})
    for key, value in params.items():
        if value is None:
            continue
        if key in DEFAULT_CAPS:
            caps[key] = int(value)
        else:
            fields[key] = value
    for key in ("K", "samples", "radius", "k_max", "root", "seed", "threads"):
        if key in fields:
            fields[key] = int(fields[key])
    for key in ("kappa", "tol"):
        if key in fields:
            fields[key] = float(fields[key])
    if fields.get("samples", 1) < 1:
        raise ValueError("samples must be >= 1")
    if fields.get("threads", 1) < 1:
        raise ValueError("threads must be >= 1")
    return ExperimentConfig(
        operation=operation,
        family=fam,
        f=elem,
        quotients=tuple(quotients),
        injectivity_radii=radii,
        h=h_elem,
        caps=caps,
        **fields,
    )


@dataclass
class ConvergenceRow:
    """One fully formatted output row."""

    index: int
    cells: tuple

    def render(self) -> str:
        return ",".join(self.cells)


@dataclass
class Report:
    """CSV-ready result: resolved-config header, provenance columns, rows."""

    operation: str
    config_lines: tuple
    columns: tuple
    rows: list
    notes: tuple = ()

    def to_csv(self) -> str:
        out = ["# config:"]
        out.extend(f"#   {line}" for line in self.config_lines)
        out.extend(f"# note: {note}" for note in self.notes)
        out.append(",".join(self.columns))
        out.extend(row.render() for row in self.rows)
        return "\n".join(out) + "\n"


def _run_tasks(cfg: ExperimentConfig, tasks: list) -> list:
    """Run zero-arg callables, results in submission order."""
    if cfg.threads <= 1 or len(tasks) <= 1:
        return [task() for task in tasks]
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        futures = [pool.submit(task) for task in tasks]
        return [future.result() for future in futures]


def _at_quotient(i: int, label: str, fn):
    """Attach the quotient index to any library error escaping fn."""
    try:
        return fn()
    except GroupForestsError as err:
        raise type(err)(f"quotient {i} ({label}): {err}") from err


def _support_words(f) -> list:
    return [w for w, _ in f.items() if not w.is_identity()]


def _spectrum_summary(cfg: ExperimentConfig, quotient: FiniteQuotient, lap):
    """Closed-form character spectrum when available, else dense solve."""
    if quotient.family.kind == "free-abelian":
        try:
            return free_abelian_spectrum(quotient, cfg.f, cutoff=cfg.kappa)
        except ValueError:
            pass
    if lap.size > cfg.cap("max_dense"):
        raise ResourceLimitError(
            f"dense eigensolve at N={lap.size} exceeds max_dense={cfg.cap('max_dense')}"
        )
    return spectrum(lap, cutoff=cfg.kappa)


def _walk_caps(cfg: ExperimentConfig) -> dict:
    return {
        "max_support": cfg.cap("max_support"),
        "max_grid_cells": cfg.cap("max_grid_cells"),
    }


# ----- identity and determinant suites --------------------------------------


def run_identity_suite(cfg: ExperimentConfig) -> Report:
    """Per quotient: exact tau = component-group order, plus the convergents.

    The defining assertion is exact big-integer equality between the
    spanning-tree count and the harmonic-component order; any mismatch
    raises IdentityMismatchError and the process exits nonzero.
    """
    laps = [
        _at_quotient(i, q.label, lambda q=q: build_laplacian(q, cfg.f))
        for i, q in enumerate(cfg.quotients)
    ]

    def exact_task(i):
        lap = laps[i]
        tau = spanning_tree_count(lap)
        comp = harmonic_component_group(lap)
        if comp.order != tau:
            raise IdentityMismatchError(
                f"tau {tau} != component order {comp.order}"
            )
        return tau, comp.order

    def spectral_task(i):
        summary = _spectrum_summary(cfg, cfg.quotients[i], laps[i])
        return fk_estimate_eigen(summary, kappa=cfg.kappa)

    notes = []
    ent_cell = ""
    try:
        ent = tree_entropy(cfg.f, cfg.K, engine=cfg.engine, **_walk_caps(cfg))
        ent_cell = _fmt(ent.value)
        notes.append(f"tree_entropy engine: {ent.engine}")
    except (ResourceLimitError, UnsupportedFamilyError) as err:
        notes.append(f"tree_entropy column skipped: {err}")

    tasks = []
    for i, q in enumerate(cfg.quotients):
        tasks.append(lambda i=i, q=q: _at_quotient(i, q.label, lambda: exact_task(i)))
        tasks.append(lambda i=i, q=q: _at_quotient(i, q.label, lambda: spectral_task(i)))
    results = _run_tasks(cfg, tasks)

    fk_col = f"fk_eigen_kappa{cfg.kappa:g}"
    ent_col = f"tree_entropy_K{cfg.K}"
    rows = []
    for i, q in enumerate(cfg.quotients):
        (tau, order), fk = results[2 * i], results[2 * i + 1]
        rows.append(
            ConvergenceRow(
                i,
                (
                    str(i),
                    str(q.size),
                    str(cfg.injectivity_radii[i]),
                    str(tau),
                    str(order),
                    _fmt(math.log(tau) / q.size),
                    _fmt(fk),
                    ent_cell,
                ),
            )
        )
    columns = (
        "n",
        "N",
        "injectivity_radius",
        "tau",
        "component_order",
        "log_tau_per_site",
        fk_col,
        ent_col,
    )
    return Report("identity", cfg.header_lines(), columns, rows, tuple(notes))


def run_fk_det(cfg: ExperimentConfig) -> Report:
    """Both determinant estimators side by side across the chain."""
    laps = [
        _at_quotient(i, q.label, lambda q=q: build_laplacian(q, cfg.f))
        for i, q in enumerate(cfg.quotients)
    ]
    tasks = []
    for i, q in enumerate(cfg.quotients):
        tasks.append(
            lambda i=i, q=q: _at_quotient(
                i, q.label, lambda: fk_estimate_eigen(_spectrum_summary(cfg, q, laps[i]), kappa=cfg.kappa)
            )
        )
        tasks.append(
            lambda i=i, q=q: _at_quotient(i, q.label, lambda: fk_estimate_tree(laps[i]))
        )
    results = _run_tasks(cfg, tasks)
    rows = []
    for i, q in enumerate(cfg.quotients):
        eig, tre = results[2 * i], results[2 * i + 1]
        # the estimators differ by exactly log(N)/N at kappa=0
        gap = math.log(q.size) / q.size
        rows.append(
            ConvergenceRow(
                i,
                (
                    str(i),
                    str(q.size),
                    str(cfg.injectivity_radii[i]),
                    _fmt(eig),
                    _fmt(tre),
                    _fmt(gap),
                    _fmt(abs(eig - tre - gap)),
                ),
            )
        )
    columns = (
        "n",
        "N",
        "injectivity_radius",
        f"fk_eigen_kappa{cfg.kappa:g}",
        "fk_tree",
        "log_n_over_n",
        "consistency_gap",
    )
    return Report("fk-det", cfg.header_lines(), columns, rows)


# ----- forests ---------------------------------------------------------------


def run_sample_ust(cfg: ExperimentConfig) -> Report:
    """Sampled spanning trees as edge lists, one row per tree edge."""
    max_steps = cfg.cap("max_steps") or None
    rows = []
    notes = []
    for i, q in enumerate(cfg.quotients):
        graph = _at_quotient(
            i, q.label, lambda q=q: QuotientMultigraph(build_laplacian(q, cfg.f))
        )
        expected = Fraction(2 * (graph.n - 1), graph.n)
        for s in range(cfg.samples):
            tree = _at_quotient(
                i,
                q.label,
                lambda: wilson_sample(
                    graph, root=cfg.root, rng=rng_stream(cfg.seed, i, s), max_steps=max_steps
                ),
            )
            assert degree_statistics(tree).mean == expected
            for u, v, slot in tree.as_edge_list():
                rows.append(
                    ConvergenceRow(i, (str(i), str(s), str(u), str(v), str(slot)))
                )
        notes.append(f"quotient {i}: mean tree degree {expected} on every sample")
    columns = ("n", "sample", "u", "v", "slot")
    return Report("sample-ust", cfg.header_lines(), columns, rows, tuple(notes))


def run_forest_suite(cfg: ExperimentConfig) -> Report:
    """Window-edge marginal tables across the chain with per-row drift.

    Drift compares each edge frequency with the same window edge one
    quotient earlier; the mean-degree column restates the exact per-sample
    value 2(N-1)/N, checked on an extra held-out sample.
    """
    chain = QuotientChain(cfg.quotients)
    tables = lift_marginals(chain, cfg.f, cfg.radius, cfg.samples, seed=cfg.seed)

    def mean_task(i, q):
        graph = QuotientMultigraph(build_laplacian(q, cfg.f))
        # one extra sample past the marginal block keeps the streams disjoint
        tree = wilson_sample(graph, rng=rng_stream(cfg.seed, i, cfg.samples))
        stats = degree_statistics(tree)
        expected = Fraction(2 * (graph.n - 1), graph.n)
        assert stats.mean == expected
        return expected

    means = _run_tasks(
        cfg,
        [
            (lambda i=i, q=q: _at_quotient(i, q.label, lambda: mean_task(i, q)))
            for i, q in enumerate(cfg.quotients)
        ],
    )

    rows = []
    prev = None
    for i, (q, table) in enumerate(zip(cfg.quotients, tables)):
        for row in table.rows:
            drift = ""
            if prev is not None and row.label in prev:
                drift = format(abs(row.frequency - prev[row.label]), ".6f")
            rows.append(
                ConvergenceRow(
                    i,
                    (
                        str(i),
                        str(q.size),
                        str(cfg.injectivity_radii[i]),
                        row.label,
                        format(row.frequency, ".6f"),
                        format(row.halfwidth, ".6f"),
                        drift,
                        str(cfg.samples),
                        str(means[i]),
                    ),
                )
            )
        prev = {r.label: r.frequency for r in table.rows}
    columns = (
        "n",
        "N",
        "injectivity_radius",
        "edge_word",
        "frequency",
        "halfwidth",
        "drift",
        "samples",
        "mean_degree",
    )
    return Report("wsf-marginals", cfg.header_lines(), columns, rows)


# ----- window density --------------------------------------------------------


def _component_window_values(cfg: ExperimentConfig, lap, window_vertices, stream_index):
    """Window coordinates of harmonic-mod-1 component representatives.

    Representatives are V . diag(1/d) . w over the invariant-factor box,
    enumerated exhaustively up to the cap and sampled uniformly beyond it.
    Returns (matrix reps x window, mode string, component order).
    """
    n = lap.size
    if n == 1:
        return np.zeros((1, len(window_vertices))), "enumerated", 1
    reduced = lap.reduced(0)
    # tree-count modulus keeps the transform's entries bounded; without it
    # the plain reduction can blow up on matrices of any size
    factors, V = smith_with_transform(reduced, modulus=spanning_tree_count(lap))
    order = 1
    for d in factors:
        order *= d
    cap = cfg.cap("max_enumerate")
    k = len(factors)
    if order <= cap:
        W = np.array(list(itertools.product(*[range(d) for d in factors])), dtype=float)
        W = W.reshape(-1, k)
        mode = "enumerated"
    else:
        rng = rng_stream(cfg.seed, stream_index + 1)
        count = min(cap, 5000)
        W = np.column_stack([rng.integers(0, d, size=count).astype(float) for d in factors])
        mode = f"sampled({count})"
    scale = np.array(
        [[V[r][j] / factors[j] for j in range(k)] for r in range(n - 1)], dtype=float
    ).reshape(n - 1, k)
    vals = (scale @ W.T) % 1.0
    full = np.vstack([np.zeros((1, vals.shape[1])), vals])
    return full[window_vertices, :].T, mode, order


def _covering_radius(probes: np.ndarray, reps: np.ndarray) -> float:
    """Max over probes of sup-metric distance to the nearest component.

    Each component is a representative plus the constant circle direction,
    so the distance from probe t is min_c max_g d(t_g - y_g - c), which is
    (1 - largest circular gap of {t_g - y_g}) / 2.
    """
    worst = 0.0
    for t in probes:
        delta = (t[None, :] - reps) % 1.0
        if delta.shape[1] == 1:
            return 0.0
        delta.sort(axis=1)
        gaps = np.diff(delta, axis=1).max(axis=1)
        wrap = 1.0 - (delta[:, -1] - delta[:, 0])
        nearest = float(((1.0 - np.maximum(gaps, wrap)) / 2.0).min())
        worst = max(worst, nearest)
    return worst


def run_window_density(cfg: ExperimentConfig) -> Report:
    """Covering radius of harmonic-component window projections per quotient.

    Estimated on a probe set shared across the whole chain, so nested
    component sets (e.g. cycle chains with dividing moduli) give a
    non-increasing column exactly.
    """
    support = _support_words(cfg.f)
    window = word_ball(cfg.family, cfg.radius, generators=support)
    probe_count = cfg.cap("probes")
    probes = rng_stream(cfg.seed).random((probe_count, len(window)))

    def one(i, q):
        inj = injectivity_radius(q, r_max=cfg.radius, generators=support)
        if inj < cfg.radius:
            raise WindowError(
                f"window radius {cfg.radius} exceeds support injectivity radius {inj}"
            )
        lap = build_laplacian(q, cfg.f)
        verts = [q.coset_of(w) for w in window]
        reps, mode, order = _component_window_values(cfg, lap, verts, i)
        rad = _covering_radius(probes, reps)
        return (
            str(i),
            str(q.size),
            str(inj),
            str(len(window)),
            str(order),
            mode,
            _fmt(rad),
        )

    results = _run_tasks(
        cfg,
        [
            (lambda i=i, q=q: _at_quotient(i, q.label, lambda: one(i, q)))
            for i, q in enumerate(cfg.quotients)
        ],
    )
    rows = [ConvergenceRow(i, cells) for i, cells in enumerate(results)]
    columns = (
        "n",
        "N",
        "injectivity_radius",
        "window_size",
        "component_order",
        "mode",
        f"covering_radius_probes{probe_count}",
    )
    return Report("window-density", cfg.header_lines(), columns, rows)


# ----- walk-side reports -----------------------------------------------------


def _checkpoints(K: int, limit: int = 200) -> list:
    stride = max(1, -(-K // limit))
    ks = list(range(stride, K + 1, stride))
    if not ks or ks[-1] != K:
        ks.append(K)
    return ks


def run_tree_entropy(cfg: ExperimentConfig) -> Report:
    res = tree_entropy(cfg.f, cfg.K, engine=cfg.engine, **_walk_caps(cfg))
    partials = res.partials
    rows = [
        ConvergenceRow(k, (str(k), _fmt(float(res.terms[k - 1])), _fmt(float(partials[k - 1]))))
        for k in _checkpoints(cfg.K)
    ]
    notes = [
        f"engine: {res.engine}",
        f"value: {_fmt(res.value)}",
        f"tail_estimate: {_fmt(res.tail_estimate)}",
    ]
    notes.extend(res.notes)
    columns = ("k", "term", f"partial_entropy_K{cfg.K}")
    return Report("tree-entropy", cfg.header_lines(), columns, rows, tuple(notes))


def run_green(cfg: ExperimentConfig) -> Report:
    # one extra shell so the residual over the requested window is defined
    green = green_truncation(cfg.f, cfg.K, cfg.radius + 1, engine=cfg.engine, **_walk_caps(cfg))
    residual = formal_inverse_residual(green, cfg.radius)
    window = word_ball(cfg.family, cfg.radius, generators=_support_words(cfg.f))
    rows = [
        ConvergenceRow(j, (format_word(w), _fmt(green.values[w.normal])))
        for j, w in enumerate(window)
    ]
    notes = [
        f"engine: {green.engine}",
        f"residual_radius{cfg.radius}: {_fmt(residual)}",
        f"tail_estimate: {_fmt(green.tail_estimate)}",
    ]
    notes.extend(green.warnings)
    columns = ("word", f"green_K{cfg.K}")
    return Report("green", cfg.header_lines(), columns, rows, tuple(notes))


def _support_radius(f, words) -> int:
    """Distance of the farthest word from the identity in f's support metric."""
    support = _support_words(f)
    targets = {w.normal for w in words}
    for r in range(65):
        ball = {w.normal for w in word_ball(f.family, r, generators=support)}
        if targets <= ball:
            return r
    raise WindowError("element support lies outside the radius-64 ball")


def run_homoclinic(cfg: ExperimentConfig) -> Report:
    h = cfg.h if cfg.h is not None else cfg.f
    h_rad = _support_radius(cfg.f, [w for w, _ in h.items()])
    green_radius = cfg.radius + h_rad + 1
    green = green_truncation(cfg.f, cfg.K, green_radius, engine=cfg.engine, **_walk_caps(cfg))
    res = homoclinic_point(h, green, window_radius=cfg.radius)
    window = word_ball(cfg.family, cfg.radius, generators=_support_words(cfg.f))
    rows = []
    for j, w in enumerate(window):
        resid = res.residuals.get(w.normal)
        rows.append(
            ConvergenceRow(
                j,
                (
                    format_word(w),
                    _fmt(res.values[w.normal]),
                    "" if resid is None else _fmt(resid),
                ),
            )
        )
    notes = [f"residual_max: {_fmt(res.residual_max)}", f"green_radius: {green_radius}"]
    notes.extend(res.notes)
    columns = ("word", f"x_K{cfg.K}", "residual")
    return Report("homoclinic", cfg.header_lines(), columns, rows, tuple(notes))


def run_spectral_radius(cfg: ExperimentConfig) -> Report:
    probe = spectral_radius_probe(
        cfg.f, cfg.k_max, engine=cfg.engine, tol=cfg.tol, **_walk_caps(cfg)
    )
    rows = []
    for j, k in enumerate(probe.k_values):
        rows.append(
            ConvergenceRow(
                j,
                (
                    str(k),
                    _fmt(probe.root_estimates[j]),
                    _fmt(probe.ratio_estimates[j]),
                    _fmt(probe.extrapolated_estimates[j]),
                ),
            )
        )
    notes = (
        f"estimate: {_fmt(probe.estimate)}",
        f"amenable_like: {str(probe.amenable_like).lower()}",
        f"tol: {_fmt(probe.tol)}",
        f"engine: {probe.engine}",
    )
    columns = ("k", "root_estimate", "ratio_estimate", "extrapolated_estimate")
    return Report("spectral-radius", cfg.header_lines(), columns, rows, notes)


RUNNERS = {
    "identity": run_identity_suite,
    "tree-entropy": run_tree_entropy,
    "fk-det": run_fk_det,
    "sample-ust": run_sample_ust,
    "wsf-marginals": run_forest_suite,
    "green": run_green,
    "homoclinic": run_homoclinic,
    "spectral-radius": run_spectral_radius,
    "window-density": run_window_density,
}


def run(cfg: ExperimentConfig) -> Report:
    return RUNNERS[cfg.operation](cfg)
