import numpy as np
import pytest

NATURAL_SOURCES = (
    "astronaut", "brick", "camera", "chelsea", "clock", "coffee", "coins", "grass",
    "gravel", "hubble_deep_field", "immunohistochemistry", "microaneurysms", "moon",
    "page", "retina", "rocket", "cell",
)


def _gray(img):
    from skimage.color import rgb2gray
    from skimage.util import img_as_float

    img = img_as_float(img)
    if img.ndim == 3:
        img = rgb2gray(img[..., :3])
    return np.clip(img, 0.0, 1.0)


@pytest.fixture(scope="session")
def natural_images():
    """50 grayscale natural images: bundled scikit-image samples and crops of them."""
    data = pytest.importorskip("skimage.data")
    images = []
    for name in NATURAL_SOURCES:
        img = _gray(getattr(data, name)())
        r, c = img.shape
        images.append(img)
        images.append(img[: r // 2, : c // 2])
        images.append(img[r // 4: 3 * r // 4, c // 4: 3 * c // 4])
    return images[:50]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in module.summary_lines():
        terminalreporter.write_line(line)
