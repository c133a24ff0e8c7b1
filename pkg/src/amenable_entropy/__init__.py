"""Entropy of amenable group actions, computed on subshifts at finite scale."""

__version__ = "0.1.0"

from .errors import DomainError, GroupMismatchError, ResourceLimitError, UnsupportedError
from .group import (
    AmenableGroup,
    FolnerSequence,
    folner_defect,
    folner_set,
    growth_report,
    invariance_defect,
    is_invariant,
    k_boundary,
    temperedness_report,
)
from .shift import (
    BowenBall,
    Configuration,
    Cylinder,
    PeriodicConfiguration,
    Subshift,
    WindowConfiguration,
    act,
    bowen_ball,
    bowen_distance,
    bowen_domain,
    enumerate_group,
    metric_distance,
    pattern_count,
)
from .measure import (
    Bernoulli,
    Markov,
    Partition,
    cylinder_mass,
    entropy_closed_form,
    partition_entropy,
    sample_configuration,
)
from .entropy import (
    SubsetSpec,
    bowen_entropy_estimate,
    caratheodory_cost,
    separated_set_max,
    topological_entropy_estimate,
)
from .generic import (
    brin_katok_trajectory,
    brin_katok_value,
    count_A_nm_words,
    empirical_measure,
    generic_point_certificate,
    in_A_nm,
    smb_trajectory,
    smb_value,
    stirling_bound,
    weak_star_distance,
)
