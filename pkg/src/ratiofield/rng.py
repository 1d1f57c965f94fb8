"""Counter-based random streams.

One root seed fans out into independent Philox streams named by a role
integer plus optional extra keys (path index, retry attempt). Decisions
that consume different roles are therefore reproducible independently of
each other and across worker counts.
"""

import numpy as np

ROLE_PATH = 0
ROLE_UNIFORM = 1
ROLE_BRIDGE = 2


def stream(seed, role, *extra):
    """Independent Generator for (seed, role, *extra)."""
    ss = np.random.SeedSequence((int(seed), int(role)) + tuple(int(e) for e in extra))
    return np.random.Generator(np.random.Philox(ss))
