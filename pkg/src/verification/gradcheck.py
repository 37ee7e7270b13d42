"""Analytic gradients from the tape against central finite differences."""

import logging
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from src.cnn import LinearClassifier
from src.diff_transformer import extend_square, normalized_base_grid, warp_color, warp_spatial
from src.itn import (
    ControlVector,
    ItnBlocks,
    ItnConfig,
    UnitVectorSet,
    itn_forward,
    loss_hat,
    loss_k,
    sample_unit_vectors,
    select_final_loss,
)
from src.tensor_core import (
    Tape,
    Tensor,
    backward,
    conv2d,
    cross_entropy,
    matmul,
    maxpool2d,
    relu,
    softmax,
    sum,
)

from .oracles import finite_diff_grad

logger = logging.getLogger(__name__)

REL_TOL = 1e-4
STEP = 1e-3
# sample points and relu inputs stay this far from the kinks
KINK_MARGIN = 0.05


@dataclass
class GradCheckReport:
    op: str
    max_rel_error: float
    failing: tuple[int, ...] | None = None
    input_index: int = 0

    @property
    def passed(self) -> bool:
        return self.failing is None


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
    return np.abs(analytic - numeric) / denom


def check_gradient(
    name: str,
    f: Callable[..., Tensor],
    inputs: list[np.ndarray],
    tol: float = REL_TOL,
    h: float = STEP,
) -> list[GradCheckReport]:
    """One report per input of the scalar function f."""
    tensors = [Tensor(x, requires_grad=True, name=f"{name}[{i}]") for i, x in enumerate(inputs)]
    with Tape() as tape:
        out = f(*tensors)
    backward(tape, out)

    reports = []
    for i, t in enumerate(tensors):

        def partial(xi: Tensor, i=i) -> Tensor:
            args = [xi if j == i else Tensor(inputs[j]) for j in range(len(inputs))]
            return f(*args)

        numeric = finite_diff_grad(partial, inputs[i], h).data
        analytic = t.grad if t.grad is not None else np.zeros_like(numeric)
        rel = relative_error(analytic, numeric)
        bad = np.argwhere(rel > tol)
        reports.append(
            GradCheckReport(
                op=name,
                max_rel_error=float(rel.max()) if rel.size else 0.0,
                failing=tuple(int(j) for j in bad[0]) if len(bad) else None,
                input_index=i,
            )
        )
    return reports


def _projection(rng: np.random.Generator, shape) -> Tensor:
    return Tensor(rng.normal(size=shape))


def _off_kinks(values: np.ndarray) -> bool:
    frac = values - np.floor(values)
    return bool(np.all((frac > KINK_MARGIN) & (frac < 1.0 - KINK_MARGIN)))


def _sample_pixels(theta: np.ndarray, h: int, w: int) -> np.ndarray:
    grid = normalized_base_grid(h, w) @ theta.T
    return np.concatenate([(grid[:, 0] + 1.0) * (w - 1) / 2.0, (grid[:, 1] + 1.0) * (h - 1) / 2.0])


def _smooth_theta(rng: np.random.Generator, h: int, w: int) -> np.ndarray:
    """A spatial map near the identity whose sample points all sit inside bilinear cells."""
    for _ in range(1000):
        theta = np.eye(2, 3) + rng.normal(0.0, 0.05, size=(2, 3))
        theta[:, 2] = rng.uniform(0.2, 0.4, size=2)
        if _off_kinks(_sample_pixels(theta, h, w)):
            return theta
    raise RuntimeError("no kink-free spatial map found")


@dataclass
class TinyItnFixture:
    """4×4 images, a 2-class linear classifier and hidden-3 blocks pushed off the identity."""

    images: np.ndarray
    labels: np.ndarray
    classifier: LinearClassifier
    blocks: ItnBlocks
    k: ControlVector
    s_color: UnitVectorSet
    s_spatial: UnitVectorSet

    @property
    def param_names(self) -> list[str]:
        return list(self.blocks.tensors())

    def with_params(self, params: list[Tensor]) -> ItnBlocks:
        blocks = self.blocks.copy()
        for name, t in zip(self.param_names, params):
            kind, pname = name.split(".")
            getattr(blocks, kind).params[pname] = t
        return blocks


def tiny_itn_fixture(seed: int = 0) -> TinyItnFixture:
    rng = np.random.default_rng(seed)
    h = w = 4
    k = ControlVector((0.6, 0.3), (0.2, 0.9))
    for _ in range(1000):
        blocks = ItnBlocks.initialize(hidden=3, seed=int(rng.integers(1 << 31)))
        for block in (blocks.color, blocks.spatial):
            block.params["b1"].data[:] = rng.uniform(0.2, 0.5, size=3)
            block.params["w2"].data[:] = rng.normal(0.0, 0.02, size=block.params["w2"].shape)
        blocks.spatial.params["b2"].data[[2, 5]] = rng.uniform(0.2, 0.4, size=2)
        pre = [np.asarray(kc) @ b.params["w1"].data + b.params["b1"].data for kc, b in zip(blocks.controls(k), (blocks.color, blocks.spatial))]
        _, spatial = blocks.maps(k)
        if all(np.all(np.abs(p) > KINK_MARGIN) for p in pre) and _off_kinks(_sample_pixels(spatial.matrix.data, h, w)):
            break
    else:
        raise RuntimeError("no kink-free ITN fixture found")
    classifier = LinearClassifier(rng.normal(0.0, 0.5, size=(3 * h * w, 2)), rng.normal(0.0, 0.1, size=2))
    return TinyItnFixture(
        images=rng.uniform(0.0, 1.0, size=(2, 3, h, w)),
        labels=np.array([0, 1]),
        classifier=classifier,
        blocks=blocks,
        k=k,
        s_color=sample_unit_vectors(4, 8, rng),
        s_spatial=sample_unit_vectors(3, 8, rng),
    )


def itn_losses(fx: TinyItnFixture, blocks: ItnBlocks) -> tuple[Tensor, Tensor, Tensor]:
    """(L_orig, L_k colour, L_k spatial) on the fixture batch."""
    out = itn_forward(Tensor(fx.images), fx.k, blocks, fx.classifier)
    k_color, k_spatial = blocks.controls(fx.k)
    return (
        cross_entropy(softmax(out.logits), fx.labels),
        loss_k(k_color, extend_square(out.color), fx.s_color),
        loss_k(k_spatial, extend_square(out.spatial), fx.s_spatial),
    )


def run_gradcheck_suite(seed: int = 0) -> list[GradCheckReport]:
    rng = np.random.default_rng(seed)
    reports: list[GradCheckReport] = []

    r = _projection(rng, (3, 2))
    reports += check_gradient("matmul", lambda a, b: sum(r * matmul(a, b)), [rng.normal(size=(3, 4)), rng.normal(size=(4, 2))])

    r = _projection(rng, (2, 3, 5, 5))
    reports += check_gradient(
        "conv2d",
        lambda x, k: sum(r * conv2d(x, k, stride=1, padding=1)),
        [rng.normal(size=(2, 2, 5, 5)), rng.normal(size=(3, 2, 3, 3))],
    )
    r = _projection(rng, (1, 2, 3, 3))
    reports += check_gradient(
        "conv2d_stride2",
        lambda x, k: sum(r * conv2d(x, k, stride=2, padding=1)),
        [rng.normal(size=(1, 1, 5, 5)), rng.normal(size=(2, 1, 3, 3))],
    )

    # distinct values 0.1 apart so the argmax survives a step of h
    r = _projection(rng, (1, 2, 2, 2))
    reports += check_gradient(
        "maxpool2d", lambda x: sum(r * maxpool2d(x, 2)), [rng.permutation(32).reshape(1, 2, 4, 4) * 0.1]
    )

    r = _projection(rng, (4, 5))
    signs = rng.choice([-1.0, 1.0], size=(4, 5))
    reports += check_gradient("relu", lambda x: sum(r * relu(x)), [signs * rng.uniform(0.1, 1.0, size=(4, 5))])

    labels = np.array([0, 2, 1])
    reports += check_gradient(
        "softmax_cross_entropy", lambda z: cross_entropy(softmax(z), labels), [rng.normal(size=(3, 4))]
    )

    r = _projection(rng, (3, 4, 4))
    reports += check_gradient(
        "warp_spatial",
        lambda img, theta: sum(r * warp_spatial(img, theta)),
        [rng.uniform(size=(3, 4, 4)), _smooth_theta(rng, 4, 4)],
    )

    r = _projection(rng, (3, 4, 4))
    reports += check_gradient(
        "warp_color",
        lambda img, phi: sum(r * warp_color(img, phi)),
        [rng.uniform(size=(3, 4, 4)), np.eye(3, 4) + rng.normal(0.0, 0.1, size=(3, 4))],
    )

    s3 = sample_unit_vectors(3, 8, rng)
    reports += check_gradient("loss_hat", lambda a: loss_hat(a, s3), [np.eye(3) + rng.normal(0.0, 0.3, size=(3, 3))])
    s4 = sample_unit_vectors(4, 8, rng)
    reports += check_gradient("loss_k", lambda a: loss_k((0.3, 0.2), a, s4), [np.eye(4) + rng.normal(0.0, 0.3, size=(4, 4))])

    fx = tiny_itn_fixture(seed)
    inputs = list(fx.blocks.tensors().values())
    cfg = ItnConfig(c_theta=2.0, acc_orig=0.5)
    reports += check_gradient("itn_orig", lambda *p: itn_losses(fx, fx.with_params(list(p)))[0], inputs)
    reports += check_gradient(
        "itn_displacement",
        lambda *p: select_final_loss(1.0, cfg, *itn_losses(fx, fx.with_params(list(p)))),
        inputs,
    )

    for report in reports:
        level = logging.INFO if report.passed else logging.ERROR
        logger.log(level, "%s[%d]: max relative error %.2e", report.op, report.input_index, report.max_rel_error)
    return reports
