"""End-to-end solver: preprocess correlated edges, grow a compatible cycle by
rotation and absorption, fall back to the structure pipeline on a sparse-pair
witness, and certify by exhaustive search on small leftovers. Every returned
cycle is re-verified against the original graph and system."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .extremal import (
    SparsePairWitness,
    StructuralError,
    almost_bipartite_hamilton,
    almost_clique_hamilton,
    build_merged_clique_instance,
    classify_sparse_pair,
    find_disjoint_cross_edges,
    refine_partition_case1,
    refine_partition_case2,
    select_E0_and_matching,
    sparse_pair_candidates,
    stitch_merged_cycles,
    witness_valid,
)
from .graphs import Graph, IncompatSystem, is_dirac, verify_hamilton_compatible
from .growth import (
    absorb_outside_vertex,
    grow_compatible_hamilton,
    preprocess_correlated,
)
from .oracle import exhaustive_compatible_hamilton
from .rotation import DEFAULT_MU, PathState, dirac_profile


class ConfigError(ValueError):
    """Raised for invalid solver configurations."""


@dataclass(frozen=True)
class SolverConfig:
    """All numeric knobs of the pipeline. Defaults are desk-scale values with
    dyadic mu so threshold products stay exact; `paper_strict` gives the
    asymptotic regime."""

    mu: float = DEFAULT_MU
    nu: float = 0.05
    eta: float = 0.05
    beta: float = 0.05
    gamma: float = 0.15
    min_degree_slack: float = 0.25
    rotation_depth: int = 3
    relaxation_tiers: tuple[bool, bool, bool] = (True, True, True)
    seed: int = 0
    oracle_cutoff: int = 12
    strict_params: bool = False

    def __post_init__(self) -> None:
        for name in ("mu", "nu", "eta", "beta", "gamma", "min_degree_slack"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise ConfigError(f"{name}={val} must lie in [0, 1]")
        if self.oracle_cutoff < 3:
            raise ConfigError("oracle_cutoff must be at least 3")
        if self.rotation_depth < 1:
            raise ConfigError("rotation_depth must be at least 1")
        if self.strict_params:
            root = self.mu ** 0.5
            if not 110 * self.nu + 250 * self.eta + 10 * root < 1.0 / 2000.0:
                raise ConfigError(
                    "strict parameters require 110*nu + 250*eta + 10*sqrt(mu) < 1/2000"
                )
            if not self.min_degree_slack <= root <= 1.0 / 400.0:
                raise ConfigError(
                    "strict parameters require min_degree_slack <= sqrt(mu) <= 1/400"
                )

    @classmethod
    def paper_strict(cls) -> "SolverConfig":
        mu = 1e-16
        root = mu ** 0.5
        return cls(
            mu=mu,
            nu=200 * root,
            eta=16 * root,
            beta=9 * 200 * root + 22 * 16 * root,
            gamma=64 * 200 * root + 144 * 16 * root,
            min_degree_slack=root,
            strict_params=True,
        )

    def to_dict(self) -> dict:
        return {
            "mu": self.mu,
            "nu": self.nu,
            "eta": self.eta,
            "beta": self.beta,
            "gamma": self.gamma,
            "min_degree_slack": self.min_degree_slack,
            "rotation_depth": self.rotation_depth,
            "relaxation_tiers": list(self.relaxation_tiers),
            "seed": self.seed,
            "oracle_cutoff": self.oracle_cutoff,
            "strict_params": self.strict_params,
        }


@dataclass
class SolveReport:
    """Outcome record. outcome is 'cycle', 'witness' or 'unsolved'; certified
    means the cycle passed verification, or an exhaustive search confirmed
    that no compatible Hamilton cycle exists."""

    outcome: str
    certified: bool
    cycle: Optional[tuple[int, ...]] = None
    witness: Optional[dict] = None
    stage_trace: list[str] = field(default_factory=list)
    counters: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    config: Optional[dict] = None

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome,
            "certified": self.certified,
            "cycle": list(self.cycle) if self.cycle is not None else None,
            "witness": self.witness,
            "stage_trace": list(self.stage_trace),
            "counters": dict(sorted(self.counters.items())),
            "warnings": list(self.warnings),
            "config": self.config,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _witness_dict(kind: str, a=None, b=None, cross=None, extra=None) -> dict:
    out = {"kind": kind}
    if a is not None:
        out["set_a"] = sorted(a)
    if b is not None:
        out["set_b"] = sorted(b)
    if cross is not None:
        out["cross_count"] = cross
    if extra:
        out.update(extra)
    return out


def _balanced_disjoint_split(
    g: Graph, a: frozenset[int], b: frozenset[int]
) -> tuple[set[int], set[int]]:
    """Disjoint starting parts for the clique-ish case: split the overlap and
    the untouched leftovers alternately, smaller side first."""
    part_a = set(a - b)
    part_b = set(b - a)
    for v in sorted((a & b) | (frozenset(range(g.n)) - (a | b))):
        if len(part_a) <= len(part_b):
            part_a.add(v)
        else:
            part_b.add(v)
    return part_a, part_b


def _solve_case1(
    g: Graph,
    system: IncompatSystem,
    witness: SparsePairWitness,
    config: SolverConfig,
    report: SolveReport,
) -> Optional[tuple[int, ...]]:
    part_a, part_b = _balanced_disjoint_split(g, witness.set_a, witness.set_b)
    w_part, c_part, moves = refine_partition_case1(g, part_a, part_b)
    report.counters["case1_refinement_moves"] = moves
    if not w_part or not c_part:
        raise StructuralError("refinement collapsed one side")
    e1, e2 = find_disjoint_cross_edges(g, w_part)
    inst = build_merged_clique_instance(g, system, w_part, e1, e2)
    mu_side = min(3 * config.mu, 0.25)
    c1 = almost_clique_hamilton(
        inst.g1, inst.f1, inst.forced1, mu=mu_side, tiers_enabled=config.relaxation_tiers
    )
    if c1 is None:
        raise StructuralError("no compatible Hamilton cycle through the first merged side")
    c2 = almost_clique_hamilton(
        inst.g2, inst.f2, inst.forced2, mu=mu_side, tiers_enabled=config.relaxation_tiers
    )
    if c2 is None:
        raise StructuralError("no compatible Hamilton cycle through the second merged side")
    return stitch_merged_cycles(g, system, inst, c1, c2)


def _solve_case2(
    g: Graph,
    system: IncompatSystem,
    witness: SparsePairWitness,
    config: SolverConfig,
    report: SolveReport,
) -> Optional[tuple[int, ...]]:
    w_part, c_part, moves = refine_partition_case2(g, witness.set_a & witness.set_b)
    report.counters["case2_refinement_moves"] = moves
    mu_side = min(3 * config.mu, 0.25)
    inst = select_E0_and_matching(g, system, w_part, c_part, mu=mu_side)
    cycle = almost_bipartite_hamilton(
        inst, mu=mu_side, tiers_enabled=config.relaxation_tiers
    )
    if cycle is None:
        raise StructuralError("the contracted bipartite instance did not close")
    if not verify_hamilton_compatible(g, system, cycle):
        raise StructuralError("expanded cycle failed verification")
    return cycle


def solve(g: Graph, system: IncompatSystem, config: Optional[SolverConfig] = None) -> SolveReport:
    """Run the full pipeline. Failures are report outcomes, never exceptions."""
    config = config or SolverConfig()
    report = SolveReport(outcome="unsolved", certified=False, config=config.to_dict())
    n = g.n
    if not is_dirac(g):
        report.warnings.append("graph is not Dirac: minimum degree below ceil(n/2)")
    if system.boundedness() > config.mu * n:
        report.warnings.append(
            f"system boundedness {system.boundedness()} exceeds mu*n = {config.mu * n:.3f}"
        )
    if n >= 3:
        report.stage_trace.append("preprocess")
        working = preprocess_correlated(g, system, config.mu)
        report.counters["edges_removed_preprocess"] = g.edge_count - working.edge_count

        report.stage_trace.append("rotation")
        profile = dirac_profile(config.mu, rotation_depth=config.rotation_depth)
        seed = PathState.from_seq(working, system, (0,))
        cycle, trace = grow_compatible_hamilton(
            working, system, seed, profile, tiers_enabled=config.relaxation_tiers
        )
        report.counters["rotations"] = trace.rotations
        report.counters["absorptions"] = trace.absorptions
        report.counters["staged_repairs"] = trace.repairs
        report.counters["relaxation_tier"] = trace.relaxation_tier
        if cycle is not None and verify_hamilton_compatible(g, system, cycle):
            report.outcome = "cycle"
            report.certified = True
            report.cycle = cycle
            return report

        candidates: list[SparsePairWitness] = []
        fw = trace.witness
        if fw is not None:
            candidates.append(SparsePairWitness.from_sets(g, fw.set_a, fw.set_b))
        candidates.extend(sparse_pair_candidates(g))
        structural: Optional[SparsePairWitness] = None
        for cand in candidates:
            if not witness_valid(g, cand, config.nu, config.eta):
                continue
            if structural is None:
                structural = cand
            try:
                branch = classify_sparse_pair(g, cand.set_a, cand.set_b, config.nu, config.eta)
            except StructuralError:
                continue
            try:
                if branch == "disjoint":
                    report.stage_trace.append("case1")
                    cycle = _solve_case1(g, system, cand, config, report)
                else:
                    report.stage_trace.append("case2")
                    cycle = _solve_case2(g, system, cand, config, report)
            except StructuralError as exc:
                report.warnings.append(f"{branch} case failed: {exc}")
                continue
            if cycle is not None and verify_hamilton_compatible(g, system, cycle):
                report.outcome = "cycle"
                report.certified = True
                report.cycle = cycle
                return report
        if structural is not None:
            report.outcome = "witness"
            report.witness = _witness_dict(
                "sparse_pair",
                structural.set_a,
                structural.set_b,
                structural.cross_count,
            )

    if n <= config.oracle_cutoff:
        report.stage_trace.append("oracle")
        result = exhaustive_compatible_hamilton(g, system)
        report.counters["oracle_nodes"] = result.nodes_explored
        if result.found:
            assert result.cycle is not None
            if verify_hamilton_compatible(g, system, result.cycle):
                report.outcome = "cycle"
                report.certified = True
                report.cycle = result.cycle
                return report
        else:
            extra = {"oracle_nodes": result.nodes_explored}
            if report.witness is not None:
                extra["structural"] = report.witness
            report.outcome = "witness"
            report.certified = True
            report.witness = _witness_dict("exhaustive_absence", extra=extra)
            return report
    return report
