from typing import NamedTuple, Optional

import numpy as np

import config
from core import logger as log
from core.corpus import Corpus
from core.errors import ShapeError
from core.linalg import truncated_svd
from core.parallel import make_rng

log = log.get_logger()


class SvdInit(NamedTuple):
    W: np.ndarray  # M x J
    U: np.ndarray  # K x J
    padded: int


def svd_init(
    corpus: Corpus, J: int, scale: Optional[float] = None, seed: int = 0
) -> SvdInit:
    """Couplings from the right singular vectors of the design matrix [X | Z].

    Text rows become W, image rows become U, both multiplied by `scale`.
    """
    scale = config.SVD_INIT_SCALE if scale is None else scale
    if len(corpus) < J:
        raise ShapeError(f"SVD initialisation needs N >= J (N={len(corpus)}, J={J})")
    svd = truncated_svd(corpus.design_matrix(), J, pad="random", rng=make_rng(seed, J))
    if svd.padded:
        log.warning(
            f"[svd_init] design matrix has rank {svd.rank}; padded {svd.padded} random "
            "orthogonal directions"
        )
    V = svd.right * scale
    log.debug(f"[svd_init] J={J}, scale={scale}, leading singular value {svd.values[0]:.4g}")
    return SvdInit(W=V[: corpus.M], U=V[corpus.M :], padded=svd.padded)
