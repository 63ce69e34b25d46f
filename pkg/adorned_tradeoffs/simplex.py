"""
Exact rational simplex for the small linear programs that arise from
constant-size queries.

All arithmetic is done with ``fractions.Fraction``. Pivoting follows Bland's
rule (lowest-index entering column, lowest-index leaving basic variable on
ratio ties), so the method terminates without any cycling safeguards.
"""
import enum
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Dict, Sequence, Optional, Tuple

__all__ = ['Sense', 'LPStatus', 'LPSolution', 'LinearProgram']

logger = logging.getLogger(__name__)


class Sense(enum.Enum):
    LE = '<='
    GE = '>='
    EQ = '=='


class LPStatus(enum.Enum):
    OPTIMAL = 'optimal'
    INFEASIBLE = 'infeasible'
    UNBOUNDED = 'unbounded'


@dataclass(frozen=True)
class LPSolution:
    status: LPStatus
    value: Optional[Fraction] = None
    values: Tuple[Fraction, ...] = ()

    @property
    def optimal(self) -> bool:
        return self.status is LPStatus.OPTIMAL


class _Tableau:

    def __init__(self, rows: List[List[Fraction]], basis: List[int],
                 num_columns: int):
        # each row holds num_columns coefficients followed by the rhs
        self.rows = rows
        self.basis = basis
        self.num_columns = num_columns
        self.excluded = set()

    def reduced_costs(self, cost: Sequence[Fraction]) -> List[Fraction]:
        reduced = list(cost)
        for row, b in zip(self.rows, self.basis):
            cb = cost[b]
            if cb:
                for j in range(self.num_columns):
                    if row[j]:
                        reduced[j] -= cb * row[j]
        return reduced

    def objective(self, cost: Sequence[Fraction]) -> Fraction:
        return sum(
            (cost[b] * row[-1] for row, b in zip(self.rows, self.basis)),
            Fraction(0)
        )

    def pivot(self, i: int, j: int):
        pivot_row = self.rows[i]
        piv = pivot_row[j]
        self.rows[i] = pivot_row = [v / piv for v in pivot_row]
        for k, row in enumerate(self.rows):
            if k == i:
                continue
            f = row[j]
            if f:
                self.rows[k] = [a - f * p for a, p in zip(row, pivot_row)]
        self.basis[i] = j

    def run(self, cost: Sequence[Fraction]) -> LPStatus:
        while True:
            reduced = self.reduced_costs(cost)
            entering = next(
                (j for j in range(self.num_columns)
                 if j not in self.excluded and reduced[j] < 0), None
            )
            if entering is None:
                return LPStatus.OPTIMAL
            candidates = [
                (row[-1] / row[entering], self.basis[i], i)
                for i, row in enumerate(self.rows) if row[entering] > 0
            ]
            if not candidates:
                return LPStatus.UNBOUNDED
            _ratio, _b, leaving = min(candidates)
            self.pivot(leaving, entering)


class LinearProgram:
    """
    min c·x subject to linear constraints and x >= 0.

    >>> lp = LinearProgram(2)
    >>> lp.add_constraint({0: 1, 1: 1}, Sense.GE, 1)
    >>> lp.minimize({0: 1, 1: 2}).value
    Fraction(1, 1)
    """

    def __init__(self, num_vars: int):
        self.num_vars = num_vars
        self.constraints: List[Tuple[Dict[int, Fraction], Sense, Fraction]] = []

    def add_constraint(self, coeffs: Dict[int, Fraction], sense: Sense, rhs):
        self.constraints.append((
            {i: Fraction(c) for i, c in coeffs.items() if c},
            sense, Fraction(rhs)
        ))

    def add_upper_bound(self, var: int, bound):
        self.add_constraint({var: 1}, Sense.LE, bound)

    def copy(self) -> 'LinearProgram':
        lp = LinearProgram(self.num_vars)
        lp.constraints = list(self.constraints)
        return lp

    def _standard_form(self):
        n = self.num_vars
        m = len(self.constraints)
        slack_count = sum(1 for _c, s, _r in self.constraints if s is not Sense.EQ)
        # columns: originals, slacks, artificials
        num_columns = n + slack_count + m
        rows = []
        slack_col = n
        for k, (coeffs, sense, rhs) in enumerate(self.constraints):
            row = [Fraction(0)] * (num_columns + 1)
            for i, c in coeffs.items():
                row[i] = c
            if sense is Sense.LE:
                row[slack_col] = Fraction(1)
                slack_col += 1
            elif sense is Sense.GE:
                row[slack_col] = Fraction(-1)
                slack_col += 1
            row[-1] = rhs
            if rhs < 0:
                row = [-v for v in row]
            row[n + slack_count + k] = Fraction(1)
            rows.append(row)
        basis = [n + slack_count + k for k in range(m)]
        return _Tableau(rows, basis, num_columns), n + slack_count

    def minimize(self, objective: Dict[int, Fraction]) -> LPSolution:
        tableau, first_artificial = self._standard_form()
        num_columns = tableau.num_columns

        # phase one: drive the artificials to zero
        phase_one = [Fraction(0)] * num_columns
        for j in range(first_artificial, num_columns):
            phase_one[j] = Fraction(1)
        tableau.run(phase_one)
        if tableau.objective(phase_one) > 0:
            return LPSolution(LPStatus.INFEASIBLE)

        # pivot remaining (zero-level) artificials out of the basis,
        # dropping redundant rows
        i = 0
        while i < len(tableau.rows):
            if tableau.basis[i] >= first_artificial:
                row = tableau.rows[i]
                j = next(
                    (j for j in range(first_artificial) if row[j]), None
                )
                if j is None:
                    del tableau.rows[i]
                    del tableau.basis[i]
                    continue
                tableau.pivot(i, j)
            i += 1
        tableau.excluded = set(range(first_artificial, num_columns))

        cost = [Fraction(0)] * num_columns
        for i, c in objective.items():
            cost[i] = Fraction(c)
        status = tableau.run(cost)
        if status is LPStatus.UNBOUNDED:
            return LPSolution(LPStatus.UNBOUNDED)
        values = [Fraction(0)] * self.num_vars
        for row, b in zip(tableau.rows, tableau.basis):
            if b < self.num_vars:
                values[b] = row[-1]
        value = sum(
            (Fraction(c) * values[i] for i, c in objective.items()), Fraction(0)
        )
        return LPSolution(LPStatus.OPTIMAL, value, tuple(values))

    def lexicographic_minimize(self, objective: Dict[int, Fraction],
                               tie_order: Sequence[int]) -> LPSolution:
        """
        Minimize the objective, then among optimal solutions minimize each
        variable of tie_order in turn.
        """
        first = self.minimize(objective)
        if not first.optimal:
            return first
        lp = self.copy()
        lp.add_constraint(objective, Sense.LE, first.value)
        solution = first
        for var in tie_order:
            step = lp.minimize({var: 1})
            # optimal by construction: the previous solution is feasible
            assert step.optimal
            lp.add_constraint({var: 1}, Sense.LE, step.values[var])
            solution = step
        return LPSolution(LPStatus.OPTIMAL, first.value, solution.values)
