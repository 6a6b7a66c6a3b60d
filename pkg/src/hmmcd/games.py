"""Exact finite-horizon analysis of the change-timing game.

Everything here is brute force on purpose: joint paths of (observation,
state, side-information) symbols are enumerated with their probabilities
under a change at each possible time, the detector's stopping behavior is
folded in analytically, and the change-imposing side's stopping times are
enumerated as antichains of nodes on its information tree (two rules that
differ only below a stopping node are the same rule).  With rational inputs
all arithmetic stays in ``fractions.Fraction`` and the central identity

    inf over change stopping times of E[reward | no false alarm]
        = inf over (time, information history) of the conditional value

is checked as exact equality.  The same enumeration evaluates the four
worst-case criteria (side watches nothing useful / the observations / the
hidden state / both).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .adversary import InfoModel


class GameSizeError(RuntimeError):
    """The requested game exceeds the exact-enumeration caps."""


# ---------------------------------------------------------------------------
# detectors on the observation tree
# ---------------------------------------------------------------------------


class GameDetector:
    """Stopping rule of the detector: a stop probability per observation history."""

    def stop_prob(self, history: tuple):
        raise NotImplementedError


@dataclass(frozen=True)
class MemorylessDetector(GameDetector):
    """Stop probability depends only on the current symbol (Shewhart-style)."""

    stop_probs: tuple

    def stop_prob(self, history):
        return self.stop_probs[history[-1]]


@dataclass(frozen=True)
class FirstSymbolDetector(GameDetector):
    """Stop at the first occurrence of a designated symbol, optionally forced
    to stop at the horizon (needed for delay rewards)."""

    symbol: int
    force_stop_at: Optional[int] = None

    def stop_prob(self, history):
        if history[-1] == self.symbol:
            return 1
        if self.force_stop_at is not None and len(history) >= self.force_stop_at:
            return 1
        return 0


@dataclass(frozen=True)
class TableDetector(GameDetector):
    """Arbitrary adapted rule given by an explicit history table."""

    table: dict
    default: int = 0

    def stop_prob(self, history):
        return self.table.get(history, self.default)


# ---------------------------------------------------------------------------
# the game
# ---------------------------------------------------------------------------


@dataclass
class FiniteGame:
    """A finite change-timing game amenable to exact enumeration.

    Model rows are sequences of numbers (Fractions keep everything exact);
    ``u_pmf`` is the side's private symbol distribution, used only when the
    information model is INDEPENDENT.  ``reward`` selects the objective:
    "detect" scores 1 when the alarm comes exactly one step after the change
    (worst case = infimum), "delay" scores the alarm lag (worst case =
    supremum and requires a detector that always stops by the horizon).
    """

    pre_obs: Sequence
    post_obs: Sequence
    pre_trans: Sequence
    post_trans: Sequence
    stationary: Sequence
    horizon: int
    detector: GameDetector
    info: InfoModel
    u_pmf: Optional[Sequence] = None
    reward: str = "detect"
    path_cap: int = 100_000
    rule_cap: int = 200_000

    def __post_init__(self):
        self.n_obs = len(self.pre_obs)
        self.n_states = len(self.stationary)
        if self.info is InfoModel.INDEPENDENT and self.u_pmf is None:
            self.u_pmf = [1]
        if self.reward not in ("detect", "delay"):
            raise ValueError(f"unknown reward {self.reward!r}")

    def n_side_symbols(self) -> int:
        if self.info is InfoModel.INDEPENDENT:
            return len(self.u_pmf)
        if self.info is InfoModel.OBSERVATIONS:
            return self.n_obs
        if self.info is InfoModel.STATE:
            return self.n_states
        return self.n_obs * self.n_states


def _side_symbol(game: FiniteGame, xi: int, z: int, u: int):
    if game.info is InfoModel.INDEPENDENT:
        return u
    if game.info is InfoModel.OBSERVATIONS:
        return xi
    if game.info is InfoModel.STATE:
        return z
    return (xi, z)


@dataclass
class _GameTables:
    """Conditional numerators/denominators per (change time, side history)."""

    denom: dict
    num_detect: dict
    num_delay: dict
    nodes_by_depth: list
    n_paths: int


def _enumerate_tables(game: FiniteGame) -> _GameTables:
    h = game.horizon
    n_u = len(game.u_pmf) if game.u_pmf is not None else 1
    u_pmf = game.u_pmf if game.u_pmf is not None else [1]
    n_paths = game.n_states * (game.n_obs * game.n_states * n_u) ** h
    if n_paths > game.path_cap:
        raise GameSizeError(f"{n_paths} joint paths exceed the cap {game.path_cap}")

    denom, num_detect, num_delay = {}, {}, {}
    nodes = [set() for _ in range(h)]  # change times 0 .. h-1
    symbol_space = list(
        itertools.product(range(game.n_obs), range(game.n_states), range(n_u))
    )
    zero = 0

    for z0 in range(game.n_states):
        base = game.stationary[z0]
        if base == 0:
            continue
        for steps in itertools.product(symbol_space, repeat=h):
            xi = [s[0] for s in steps]
            z = [z0] + [s[1] for s in steps]
            u = [s[2] for s in steps]
            pre = [
                game.pre_obs[xi[s]] * game.pre_trans[z[s]][z[s + 1]] * u_pmf[u[s]]
                for s in range(h)
            ]
            post = [
                game.post_obs[z[s + 1]][xi[s]] * game.post_trans[z[s]][z[s + 1]] * u_pmf[u[s]]
                for s in range(h)
            ]
            # prefix products of nominal factors, suffix products of changed ones
            pre_prod = [base]
            for s in range(h):
                pre_prod.append(pre_prod[-1] * pre[s])
            post_suffix = [1] * (h + 1)
            for s in range(h - 1, -1, -1):
                post_suffix[s] = post_suffix[s + 1] * post[s]

            a = [game.detector.stop_prob(tuple(xi[: s + 1])) for s in range(h)]
            survive = [1]
            for s in range(h):
                survive.append(survive[-1] * (1 - a[s]))
            stop_at = [survive[s] * a[s] for s in range(h)]  # stop at time s+1

            if game.reward == "delay" and float(survive[h]) > 1e-12:
                raise ValueError(
                    "delay reward requires a detector that stops by the horizon"
                )

            w = [_side_symbol(game, xi[s], z[s + 1], u[s]) for s in range(h)]
            for t in range(h):
                prob_t = pre_prod[t] * post_suffix[t]
                if prob_t == 0:
                    continue
                key = (t, tuple(w[:t]))
                nodes[t].add(key[1])
                weight = prob_t * survive[t]
                denom[key] = denom.get(key, zero) + weight
                num_detect[key] = num_detect.get(key, zero) + prob_t * stop_at[t]
                if game.reward == "delay":
                    lag = sum(stop_at[s] * (s + 1 - t) for s in range(t, h))
                    num_delay[key] = num_delay.get(key, zero) + prob_t * lag
    return _GameTables(denom, num_detect, num_delay, nodes, n_paths)


def _count_antichains(children: dict, node) -> int:
    kids = children.get(node, ())
    if not kids:
        return 2
    total = 1
    for c in kids:
        total *= _count_antichains(children, c)
    return 1 + total


def _antichain_sets(children: dict, node):
    """All antichains within the subtree of ``node``, the empty one included."""
    kids = children.get(node, ())
    own = [(node,)]
    if not kids:
        return own + [()]
    combos = [()]
    for c in kids:
        child_sets = _antichain_sets(children, c)
        combos = [existing + extra for existing in combos for extra in child_sets]
    return own + combos


@dataclass(frozen=True)
class Lemma1Report:
    lhs: object
    rhs: object
    mode: str
    attaining: tuple
    n_rules: int
    n_paths: int

    @property
    def exact(self) -> bool:
        if isinstance(self.lhs, Fraction) and isinstance(self.rhs, Fraction):
            return self.lhs == self.rhs
        return abs(float(self.lhs) - float(self.rhs)) <= 1e-12


def lemma1_enumerate(game: FiniteGame) -> Lemma1Report:
    """Enumerate every stopping time of the change-imposing side and compare
    the worst conditional value against the double-optimization expression.

    The side's stopping times are antichains on its information tree: the
    change happens at the first antichain node the history hits.  The report
    carries both sides of the identity; with Fraction inputs they must match
    exactly.
    """
    tables = _enumerate_tables(game)
    num = tables.num_delay if game.reward == "delay" else tables.num_detect
    mode = "sup" if game.reward == "delay" else "inf"
    better = max if mode == "sup" else min

    # rhs: optimize over change time and side history jointly
    rhs = None
    attaining = []
    for key, d in tables.denom.items():
        if d == 0:
            continue
        value = num.get(key, 0) / d
        if rhs is None or (value != rhs and better(value, rhs) == value):
            rhs = value
            attaining = [key]
        elif value == rhs:
            attaining.append(key)
    if rhs is None:
        raise ValueError("no conditioning event has positive probability")

    # lhs: enumerate the side's stopping times
    children = {}
    root = (0, ())
    all_nodes = [root]
    for t in range(game.horizon - 1):
        for h in tables.nodes_by_depth[t]:
            node = (t, h)
            kids = [
                (t + 1, h2)
                for h2 in tables.nodes_by_depth[t + 1]
                if h2[:t] == h
            ]
            children[node] = tuple(kids)
            all_nodes.extend(kids)
    n_rules = _count_antichains(children, root)
    if n_rules > game.rule_cap:
        raise GameSizeError(f"{n_rules} stopping rules exceed the cap {game.rule_cap}")

    lhs = None
    zero = 0
    for antichain in _antichain_sets(children, root):
        if not antichain:
            continue
        d_total = sum(tables.denom.get(k, zero) for k in antichain)
        if d_total == 0:
            continue
        n_total = sum(num.get(k, zero) for k in antichain)
        value = n_total / d_total
        if lhs is None or better(value, lhs) == value:
            lhs = value
    return Lemma1Report(
        lhs=lhs,
        rhs=rhs,
        mode=mode,
        attaining=tuple(attaining),
        n_rules=n_rules - 1,  # minus the empty rule
        n_paths=tables.n_paths,
    )


@dataclass(frozen=True)
class CriteriaReport:
    p_i: float
    p_ii: float
    p_iii: float
    p_iv: float
    ordering_ok: bool

    def as_dict(self):
        return {
            "P_i": self.p_i,
            "P_ii": self.p_ii,
            "P_iii": self.p_iii,
            "P_iv": self.p_iv,
        }


def criteria_bridge(game: FiniteGame) -> CriteriaReport:
    """Evaluate the four worst-case detection criteria exactly.

    Reuses the conditional tables with the side's stream instantiated per
    criterion; finer information can only lower the worst case, which is
    asserted via the reported ordering flag.
    """
    values = {}
    for info in InfoModel:
        variant = FiniteGame(
            pre_obs=game.pre_obs,
            post_obs=game.post_obs,
            pre_trans=game.pre_trans,
            post_trans=game.post_trans,
            stationary=game.stationary,
            horizon=game.horizon,
            detector=game.detector,
            info=info,
            u_pmf=[1] if info is InfoModel.INDEPENDENT else None,
            reward="detect",
            path_cap=game.path_cap,
        )
        tables = _enumerate_tables(variant)
        worst = None
        for key, d in tables.denom.items():
            if d == 0:
                continue
            value = tables.num_detect.get(key, 0) / d
            if worst is None or value < worst:
                worst = value
        values[info] = worst
    tol = 1e-12
    ordering_ok = (
        values[InfoModel.INDEPENDENT] >= values[InfoModel.OBSERVATIONS] - tol
        and values[InfoModel.OBSERVATIONS] >= values[InfoModel.BOTH] - tol
        and values[InfoModel.INDEPENDENT] >= values[InfoModel.STATE] - tol
        and values[InfoModel.STATE] >= values[InfoModel.BOTH] - tol
    )
    return CriteriaReport(
        p_i=values[InfoModel.INDEPENDENT],
        p_ii=values[InfoModel.OBSERVATIONS],
        p_iii=values[InfoModel.STATE],
        p_iv=values[InfoModel.BOTH],
        ordering_ok=ordering_ok,
    )


# ---------------------------------------------------------------------------
# exact rational model construction
# ---------------------------------------------------------------------------


def _solve_exact(matrix, rhs):
    """Gaussian elimination over Fractions."""
    n = len(rhs)
    a = [row[:] + [rhs[i]] for i, row in enumerate(matrix)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col] != 0), None)
        if pivot is None:
            raise ValueError("singular system")
        a[col], a[pivot] = a[pivot], a[col]
        inv = Fraction(1, 1) / a[col][col]
        a[col] = [v * inv for v in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                factor = a[r][col]
                a[r] = [v - factor * w for v, w in zip(a[r], a[col])]
    return [a[r][n] for r in range(n)]


def exact_stationary(pre_trans):
    """Stationary row vector of a rational stochastic matrix, exactly."""
    n = len(pre_trans)
    # x P = x, sum x = 1  ->  (P^T - I) x = 0 with the last equation replaced
    matrix = [
        [pre_trans[j][i] - (1 if i == j else 0) for j in range(n)] for i in range(n)
    ]
    matrix[-1] = [Fraction(1)] * n
    rhs = [Fraction(0)] * (n - 1) + [Fraction(1)]
    return _solve_exact(matrix, rhs)


def _random_pmf(gen, size, denom):
    while True:
        ks = [int(gen.integers(1, denom + 1)) for _ in range(size)]
        total = sum(ks)
        if total > 0:
            return [Fraction(k, total) for k in ks]


def random_game(gen, n_obs: int = 2, n_states: int = 2, horizon: int = 3,
                info: InfoModel = InfoModel.STATE, reward: str = "detect",
                denom: int = 6, change_states: bool = True) -> FiniteGame:
    """A random rational game with an adapted random detector.

    The stationary law is solved exactly for the sampled nominal kernel, so
    every game in the corpus satisfies the model invariants by construction.
    """
    pre_obs = _random_pmf(gen, n_obs, denom)
    post_obs = [_random_pmf(gen, n_obs, denom) for _ in range(n_states)]
    pre_trans = [_random_pmf(gen, n_states, denom) for _ in range(n_states)]
    if change_states:
        post_trans = [_random_pmf(gen, n_states, denom) for _ in range(n_states)]
    else:
        post_trans = [row[:] for row in pre_trans]
    stationary = exact_stationary(pre_trans)

    table = {}
    for depth in range(1, horizon + 1):
        for hist in itertools.product(range(n_obs), repeat=depth):
            if reward == "delay" and depth == horizon:
                table[hist] = 1
            else:
                table[hist] = int(gen.integers(0, 2))
    detector = TableDetector(table=table)
    return FiniteGame(
        pre_obs=pre_obs,
        post_obs=post_obs,
        pre_trans=pre_trans,
        post_trans=post_trans,
        stationary=stationary,
        horizon=horizon,
        detector=detector,
        info=info,
        reward=reward,
    )
