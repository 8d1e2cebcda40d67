"""Integer-age mortality: survivor tables and the discrete Weibull law.

Both model types answer the same questions: the survival ratio s(age)
relative to a reference, the one-year pair (p, q) at an age, and the age
at which whole-life windows stop. Everything in ``premiums`` and
``fractional`` is written against that interface only.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

from .errors import AgeRangeError, DomainError, TableError


class Probabilities(NamedTuple):
    """One-year and k-year probabilities seen from issue age x."""

    p: float  # p_{x+k}
    q: float  # q_{x+k}
    kpx: float  # k p_x
    k1px: float  # (k+1) p_x
    terminal: bool  # s(x+k) == 0: nobody is left to die in this year


@dataclass(frozen=True)
class MortalityTable:
    """Survivor counts l at consecutive integer ages starting at ``base_age``.

    ``omega`` is an offset from ``base_age``: the first offset with l = 0,
    or one past the last row when the table never reaches zero.
    """

    base_age: int
    survivors: tuple[float, ...]
    omega: int = field(init=False)

    def __post_init__(self):
        if self.base_age < 0:
            raise TableError(f"base age must be >= 0, got {self.base_age}")
        if not self.survivors:
            raise TableError("table has no rows")
        values = tuple(float(v) for v in self.survivors)
        object.__setattr__(self, "survivors", values)
        for offset, value in enumerate(values):
            age = self.base_age + offset
            if not math.isfinite(value):
                raise TableError(f"non-finite survivor count {value!r}", row=age)
            if value < 0:
                raise TableError(f"negative survivor count {value!r}", row=age)
            if offset == 0:
                if value <= 0:
                    raise TableError("first survivor count must be positive", row=age)
                continue
            previous = values[offset - 1]
            if previous == 0 and value > 0:
                raise TableError("survivor count rises again after reaching 0", row=age)
            if value > previous:
                raise TableError(f"increasing survivor count ({previous!r} -> {value!r})",
                                 row=age)
        omega = next((i for i, v in enumerate(values) if v == 0), len(values))
        object.__setattr__(self, "omega", omega)

    @property
    def last_age(self) -> int:
        return self.base_age + len(self.survivors) - 1

    @property
    def is_terminal(self) -> bool:
        """True when the table ends in l = 0."""
        return self.omega < len(self.survivors)

    @property
    def horizon_age(self) -> int:
        """Age at which whole-life windows end.

        A table that reaches zero ends at its terminal age. Otherwise the
        last row has no successor, so its one-year q is unknown and the
        horizon is the last age with data.
        """
        if self.is_terminal:
            return self.base_age + self.omega
        return self.last_age

    def lives(self, age: int) -> float:
        if age < self.base_age:
            raise AgeRangeError(f"age {age} precedes the table start {self.base_age}")
        offset = age - self.base_age
        if offset < len(self.survivors):
            return self.survivors[offset]
        if self.is_terminal:
            return 0.0
        raise AgeRangeError(f"age {age} is beyond the last table age {self.last_age}")

    def survival(self, age: int) -> float:
        """s(age) = l_age / l_base."""
        return self.lives(age) / self.survivors[0]

    def one_year(self, age: int) -> tuple[float, float]:
        """(p_age, q_age); (0, 1) once the cohort has died out."""
        l_now = self.lives(age)
        if l_now == 0:
            return 0.0, 1.0
        l_next = self.lives(age + 1)
        return l_next / l_now, (l_now - l_next) / l_now

    def rows(self) -> list[tuple[int, float]]:
        return [(self.base_age + i, v) for i, v in enumerate(self.survivors)]


@dataclass(frozen=True)
class WeibullLaw:
    """Discrete Weibull survival s(age) = exp(-(age/alpha)^beta).

    ``omega_hint`` is the truncation age for whole-life windows; by default
    the first age where the survival from birth drops below 1e-16.
    """

    alpha: float
    beta: float
    omega_hint: int | None = None

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise DomainError(f"Weibull parameters must be positive, got "
                              f"alpha={self.alpha!r}, beta={self.beta!r}")
        if self.omega_hint is None:
            # (k/alpha)^beta > log(1e16)
            k = math.ceil(self.alpha * math.log(1e16) ** (1.0 / self.beta))
            while self._cumulative_hazard(k - 1) > math.log(1e16):
                k -= 1
            while self._cumulative_hazard(k) <= math.log(1e16):
                k += 1
            object.__setattr__(self, "omega_hint", k)
        elif self.omega_hint < 1:
            raise DomainError(f"omega_hint must be >= 1, got {self.omega_hint!r}")

    def _cumulative_hazard(self, age):
        return (age / self.alpha) ** self.beta

    @property
    def base_age(self) -> int:
        return 0

    @property
    def is_terminal(self) -> bool:
        return False

    @property
    def horizon_age(self) -> int:
        return self.omega_hint

    def survival(self, age: int) -> float:
        if age < 0:
            raise AgeRangeError(f"negative age {age}")
        return math.exp(-self._cumulative_hazard(age))

    def one_year(self, age: int) -> tuple[float, float]:
        if age < 0:
            raise AgeRangeError(f"negative age {age}")
        hazard = self._cumulative_hazard(age + 1) - self._cumulative_hazard(age)
        return math.exp(-hazard), -math.expm1(-hazard)

    def kpx(self, x: int, k: int) -> float:
        """k p_x = exp{(x/alpha)^beta - ((x+k)/alpha)^beta}."""
        return math.exp(self._cumulative_hazard(x) - self._cumulative_hazard(x + k))


MortalityModel = MortalityTable | WeibullLaw


def load_table(rows: Iterable[Sequence[float]]) -> MortalityTable:
    """Build a validated table from ``(age, l)`` pairs with contiguous ascending ages."""
    rows = list(rows)
    if not rows:
        raise TableError("table has no rows")
    ages = []
    values = []
    for age, value in rows:
        if int(age) != age:
            raise TableError(f"age {age!r} is not an integer")
        age = int(age)
        if ages and age != ages[-1] + 1:
            raise TableError(f"ages are not contiguous ({ages[-1]} -> {age})", row=age)
        ages.append(age)
        values.append(float(value))
    return MortalityTable(ages[0], tuple(values))


def from_weibull(alpha: float, beta: float, omega_hint: int | None = None) -> WeibullLaw:
    return WeibullLaw(alpha, beta, omega_hint)


def read_table_csv(text: str) -> MortalityTable:
    """Parse the ``age,lx`` CSV format.

    TableError messages name the offending CSV line.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise TableError("empty file: expected header 'age,lx'") from None
    if [h.strip().lower() for h in header] != ["age", "lx"]:
        raise TableError(f"line 1: expected header 'age,lx', got {','.join(header)!r}")
    rows = []
    for line_no, record in enumerate(reader, start=2):
        if not record or all(not cell.strip() for cell in record):
            continue
        if len(record) != 2:
            raise TableError(f"line {line_no}: expected 2 fields, got {len(record)}")
        try:
            age = int(record[0])
            value = float(record[1])
        except ValueError:
            raise TableError(f"line {line_no}: cannot parse {','.join(record)!r}") from None
        rows.append((age, value))
    if not rows:
        raise TableError("no data rows after the header")
    return load_table(rows)


def write_table_csv(table: MortalityTable) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["age", "lx"])
    for age, value in table.rows():
        writer.writerow([age, repr(value)])
    return out.getvalue()


def kpx(model: MortalityModel, x: int, k: int) -> float:
    """k p_x = s(x+k)/s(x)."""
    if k < 0:
        raise DomainError(f"k must be >= 0, got {k}")
    if isinstance(model, WeibullLaw):
        return model.kpx(x, k)
    s_x = model.lives(x)
    if s_x == 0:
        raise AgeRangeError(f"s({x}) = 0: nobody is alive at the issue age")
    return model.lives(x + k) / s_x


def probabilities(model: MortalityModel, x: int, k: int) -> Probabilities:
    """(p_{x+k}, q_{x+k}, k p_x, (k+1) p_x) for issue age x and year k."""
    k_surv = kpx(model, x, k)
    if k_surv == 0:
        return Probabilities(0.0, 1.0, 0.0, 0.0, True)
    p, q = model.one_year(x + k)
    return Probabilities(p, q, k_surv, k_surv * p, False)
