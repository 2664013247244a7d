from __future__ import annotations

from dataclasses import asdict, dataclass, fields


class ParamError(ValueError):
    pass


@dataclass(frozen=True)
class ProtocolParams:
    """Protocol constants.  Defaults are the analyzed setting (k=80,
    alpha1=41, alpha2=72, alpha3=48, beta=14, gamma=300)."""

    n: int = 25
    f: int = 0
    k: int = 80
    alpha1: int = 41
    alpha2: int = 72
    alpha3: int = 48
    beta: int = 14
    gamma: int = 300
    mu: int = 3
    delta: int = 1
    hash_bits: int = 32

    def validate(self, allow_unsafe: bool = False) -> "ProtocolParams":
        problems = []
        if self.n < 1:
            problems.append("n must be positive")
        if self.f < 0:
            problems.append("f must be non-negative")
        if not allow_unsafe and not 5 * self.f < self.n:
            problems.append(f"f < n/5 violated (n={self.n}, f={self.f})")
        if not (self.k >= self.alpha2 >= self.alpha1 and 2 * self.alpha1 > self.k):
            problems.append("need k >= alpha2 >= alpha1 > k/2")
        if not 1 <= self.alpha3 <= self.k:
            problems.append("need 1 <= alpha3 <= k")
        for name in ("beta", "gamma", "mu", "delta", "hash_bits"):
            if getattr(self, name) < 1:
                problems.append(f"{name} must be >= 1")
        if problems:
            raise ParamError("; ".join(problems))
        return self

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def field_names(cls) -> tuple:
        return tuple(f.name for f in fields(cls))
