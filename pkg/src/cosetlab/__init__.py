"""Statistical enumeration of finite groups by double cosets.

Three families are covered: Bruhat cells of GL_n(F_q) (Mallows measure),
hyperoctahedral double cosets of S_2n (Ewens measure at theta = 1/2) and
parabolic double cosets of S_n (Fisher-Yates contingency tables).
"""

from cosetlab.combinat import Partition, Permutation
from cosetlab.errors import CosetlabError, LimitExceeded, SingularMatrix

__version__ = "0.1.0"

__all__ = [
    "CosetlabError",
    "LimitExceeded",
    "Partition",
    "Permutation",
    "SingularMatrix",
]
