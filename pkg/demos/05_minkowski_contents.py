"""Every content method on the middle-thirds Cantor set, cross-validated.

The exact antiderivative of the generator integral gives
(1/ln 3) [ (2/D) 6^-D + 6^(1-D) / (3(1-D)) ] ~ 2.52428, and the five
computational routes all land on it. The system is lattice, so the direct
limit reports an oscillation band rather than a number.
"""

from fractal_tiling_lab.pipeline import get_bundle
from fractal_tiling_lab.presets import CANTOR_CONTENT_CLOSED_FORM

b = get_bundle("cantor")
print("closed form:", CANTOR_CONTENT_CLOSED_FORM, "\n")
for method in ("generator_integral", "tiling_via_h", "gatzouras",
               "relative_generator", "direct_average"):
    r = b.content(method)
    rel = abs(r.value - CANTOR_CONTENT_CLOSED_FORM) / CANTOR_CONTENT_CLOSED_FORM
    print(f"{method:20s} {r.value:.6f}  (+- {r.error_estimate:.4f}, rel dev {rel:.2e})")

dl = b.content("direct_limit")
print(f"\ndirect_limit: oscillation band {dl.extra['band']} (lattice system, no limit asserted)")

# the monophase closed form: an interval generator of length L has
# kappa_0 = 2 and g = L/2
from fractal_tiling_lab.contents import MonophaseData, monophase_content

dd = b.dim_data
mono = monophase_content(MonophaseData((2.0,), 1 / 6), dd.D, dd.eta, 1)
print("monophase closed form for the interval generator:", mono.value)
