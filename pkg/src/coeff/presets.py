"""Named coefficient fields used by the benchmark experiments."""

from collections.abc import Callable, Mapping
from dataclasses import dataclass, field

from src.coeff.expr import norm_text
from src.coeff.field import CoefficientField, upper_index
from src.errors import FieldError


def _square_norm_text(d: int) -> str:
    return " + ".join(f"x{i}^2" for i in range(1, d + 1))


def _identity(d: int, params: Mapping[str, float]) -> CoefficientField:
    return CoefficientField.isotropic(d, "1", "identity")


def _anisotropic(d: int, params: Mapping[str, float]) -> CoefficientField:
    texts = []
    for i, j in upper_index(d):
        default = 1.0 if i == j else (0.5 if (i, j) == (0, 1) else 0.0)
        texts.append(repr(float(params.get(f"a{i + 1}{j + 1}", default))))
    return CoefficientField.from_texts(d, texts, "constant-anisotropic")


def _sinusoidal(d: int, params: Mapping[str, float]) -> CoefficientField:
    mean = params.get("mean", 1.5)
    amplitude = params.get("amplitude", 0.5)
    return CoefficientField.isotropic(d, f"{mean!r} + {amplitude!r} * sin(x1)", "sinusoidal")


def _power_growth(d: int, params: Mapping[str, float]) -> CoefficientField:
    p = params.get("p", 2.0)
    return CoefficientField.isotropic(d, f"(1 + {norm_text(d)})^{p!r}", "power-growth")


def _tikhonov_boundary(d: int, params: Mapping[str, float]) -> CoefficientField:
    c = params.get("c", 1.0)
    r = norm_text(d)
    return CoefficientField.isotropic(
        d, f"{c!r} * (1 + {r})^2 * log(2 + {r})", "tikhonov-boundary"
    )


def _degenerate(d: int, params: Mapping[str, float]) -> CoefficientField:
    return CoefficientField.diagonal(d, ["x1^2"] + ["1"] * (d - 1), "degenerate")


def _explosive(d: int, params: Mapping[str, float]) -> CoefficientField:
    return CoefficientField.isotropic(d, f"(1 + {_square_norm_text(d)})^2", "explosive")


@dataclass(frozen=True)
class Preset:
    """A named field family with its parameter schema."""

    name: str
    description: str
    builder: Callable[[int, Mapping[str, float]], CoefficientField]
    params: dict[str, float] = field(default_factory=dict)
    dimensions: tuple[int, ...] = (1, 2, 3)

    def build(self, d: int, params: Mapping[str, float] | None = None) -> CoefficientField:
        given = dict(params or {})
        unknown = set(given) - set(self.params)
        if unknown:
            raise FieldError(f"preset {self.name!r} has no parameter(s) {sorted(unknown)}")
        if d not in self.dimensions:
            raise FieldError(f"preset {self.name!r} is defined for d in {self.dimensions}")
        return self.builder(d, {**self.params, **given})


_PRESETS: tuple[Preset, ...] = (
    Preset("identity", "C = I", _identity),
    Preset(
        "constant-anisotropic",
        "constant symmetric matrix, default [[1, 0.5], [0.5, 1]]",
        _anisotropic,
        {"a11": 1.0, "a12": 0.5, "a13": 0.0, "a22": 1.0, "a23": 0.0, "a33": 1.0},
        (2, 3),
    ),
    Preset(
        "sinusoidal",
        "(mean + amplitude sin x1) I",
        _sinusoidal,
        {"mean": 1.5, "amplitude": 0.5},
    ),
    Preset("power-growth", "(1 + |x|)^p I", _power_growth, {"p": 2.0}),
    Preset(
        "tikhonov-boundary",
        "c (1 + |x|)^2 log(2 + |x|) I, the largest growth the Tikhonov condition allows",
        _tikhonov_boundary,
        {"c": 1.0},
    ),
    Preset("degenerate", "diag(x1^2, 1, ...), vanishing on x1 = 0", _degenerate),
    Preset("explosive", "(1 + |x|^2)^2 I, non-conservative growth", _explosive),
)


def preset_catalog() -> list[Preset]:
    """All presets in stable order."""
    return list(_PRESETS)


def build_preset(
    name: str,
    d: int,
    params: Mapping[str, float] | None = None,
) -> CoefficientField:
    """Instantiate a preset by name."""
    for preset in _PRESETS:
        if preset.name == name:
            return preset.build(d, params)
    known = ", ".join(p.name for p in _PRESETS)
    raise FieldError(f"unknown preset {name!r} (known: {known})")
