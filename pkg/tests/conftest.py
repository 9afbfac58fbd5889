import numpy as np
import pytest

from stegmark import RasterImage, StegoKey


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def key():
    return StegoKey(0x0123456789ABCDEF)


def random_image(rng, h, w, c=1):
    return RasterImage(rng.integers(0, 256, (h, w, c), dtype=np.uint8))


def peaked_image(rng, h, w, c=1, centre=128, spread=4.0):
    """Narrow-histogram image: plenty of histogram-shifting capacity."""
    base = np.clip(rng.normal(centre, spread, (h, w, 1)), 0, 255)
    if c == 3:
        jitter = rng.integers(-6, 1, (h, w, 3))
        base = np.clip(base + jitter, 0, 255)
    return RasterImage(base.astype(np.uint8))


def dark_background(rng, h, w):
    """Sonogram-like fixture: black surroundings, textured fan in the middle."""
    img = np.zeros((h, w, 1), dtype=np.uint8)
    yy, xx = np.mgrid[0:h, 0:w]
    fan = (yy - h * 0.15) ** 2 + (xx - w / 2) ** 2 < (0.5 * h) ** 2
    fan &= yy > h * 0.15
    img[fan, 0] = rng.integers(40, 200, int(fan.sum()), dtype=np.uint8)
    return RasterImage(img)


# --------------------------------------------------------------------------
# acceptance reporting: one PASS/FAIL line per criterion in the summary

_CRITERIA = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call":
        return
    number, title = mark.args
    detail = dict(item.user_properties).get("detail", "")
    status = "PASS" if rep.passed else "FAIL"
    _CRITERIA.append((number, f"criterion {number} {title}: {status}" + (f" ({detail})" if detail else "")))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for _, line in sorted(_CRITERIA):
        terminalreporter.write_line(line)
