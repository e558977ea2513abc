"""Rate regions, channel orderings and random-coding simulation for the
discrete memoryless cognitive interference channel."""

__version__ = "0.1.0"

from .bounds import (  # noqa: E402
    KINDS,
    RegionResult,
    SearchBudget,
    achievable_pln_cor2,
    capacity_cln_cor1,
    capacity_cln_thm4,
    compute_region,
    inner_region_thm2,
    inner_region_thm3,
    outer_region_thm1,
    polytope_thm2,
    region_c1,
    region_c2,
    region_c3,
    representation_region1,
    strong_interference_reexpression,
)
from .channel import AuxInput, CicChannel, fixture, load_channel, make_degraded_cognitive  # noqa: E402
from .conditions import (  # noqa: E402
    Status,
    Verdict,
    check_better_cognitive,
    check_cognitive_less_noisy,
    check_primary_less_noisy,
    check_strong_interference,
    check_weak_interference,
    lemma1_harness,
)
from .prob import ProbTensor, conditional_mutual_information, entropy, mutual_information  # noqa: E402
from .regions import RatePoint, RateRegion, contains, equal, hull_of, subset  # noqa: E402
