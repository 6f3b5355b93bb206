"""Figure styling.

All visual variation flows through :class:`Style`; the renderer itself
takes no ad-hoc keyword arguments.  Default colors follow the estimator
legend conventions of the experiment suite: green for the minimum-norm
interpolator, red for the proposed spectral estimator / its closed-form
approximator, blue for the sampled posterior, with gray and blue slots
reserved for external spike-and-slab / horseshoe baselines should their
rows appear.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

DEFAULT_COLORS: dict[str, str] = {
    "spectral_bayes": "tab:red",
    "approx": "tab:red",
    "snis": "tab:blue",
    "mni": "tab:green",
    "ridge": "tab:orange",
    "spike_slab": "tab:gray",
    "horseshoe": "tab:blue",
}

FALLBACK_COLOR = "black"


@dataclass(frozen=True)
class Style:
    bins: int = 20
    dpi: int = 120
    colors: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_COLORS))
    alpha: float = 0.55
    marker_size: float = 6.0

    def color(self, key: str) -> str:
        return self.colors.get(key, FALLBACK_COLOR)


def load_style(path=None) -> Style:
    """Build a :class:`Style`, overlaying a JSON file when given.

    The file may set any subset of the style fields; ``colors`` entries
    merge over the defaults instead of replacing the whole mapping.
    """
    style = Style()
    if path is None:
        return style
    with open(path, encoding="utf-8") as handle:
        raw = json.load(handle)
    if not isinstance(raw, dict):
        raise ValueError("style file must contain a JSON object")
    unknown = set(raw) - {"bins", "dpi", "colors", "alpha", "marker_size"}
    if unknown:
        raise ValueError(f"unknown style keys: {sorted(unknown)}")
    if "colors" in raw:
        merged = dict(DEFAULT_COLORS)
        merged.update(raw.pop("colors"))
        style = replace(style, colors=merged)
    return replace(style, **raw)
