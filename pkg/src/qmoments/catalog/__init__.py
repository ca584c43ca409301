from .appendix_d import AppendixDModel, appendix_d_test, canonical_model, classical_q_check
from .cfrd import (
    cfrd_two_setting,
    cfrd_two_party,
    m_matrix,
    oscillator_tripartite_bound,
    quadripartite_cfrd,
    tripartite_cfrd,
    tsirelson_check,
)
from .ghz import ghz_observables, ghz_state, ghz_test
from .mermin_peres import (
    MerminPeresSquare,
    classical_mp_check,
    det_identity_check,
    mermin_peres_square,
    mp_inequality,
)
from .report import InequalityReport

REFERENCE_Z = (
    0.828979, 0.419264, 0.26503, 0.181928, 0.129563, 0.0934879,
    0.0671523, 0.0471264, 0.0314302, 0.0188364, 0.00854237,
)

__all__ = [
    "AppendixDModel", "appendix_d_test", "canonical_model", "classical_q_check", "cfrd_two_setting",
    "cfrd_two_party", "m_matrix", "oscillator_tripartite_bound", "quadripartite_cfrd",
    "tripartite_cfrd", "tsirelson_check", "ghz_observables", "ghz_state", "ghz_test",
    "MerminPeresSquare", "classical_mp_check", "det_identity_check", "mermin_peres_square",
    "mp_inequality", "InequalityReport", "REFERENCE_Z",
]
