import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from latentstego.params import EmbedParams, ParamTable, Scheduler  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20241016)


def small_table(tau=0.3, rho=2, scheduler=Scheduler.SINGLE, msg_len=4, latent_count=256, **kw):
    return ParamTable.single(
        EmbedParams(tau, rho, scheduler, msg_len_bytes=msg_len, latent_count=latent_count, **kw)
    )
