import json
import math

import numpy as np
import pytest

from conftest import make_mdp
from robustmdp import mdpfile
from robustmdp.robust_bellman import Rect, UncertaintySpec


def base_doc():
    return {
        "num_states": 2,
        "num_actions": 1,
        "gamma": 0.5,
        "reward": [[1.0], [1.0]],
        "kernel": [[[0.0, 1.0]], [[1.0, 0.0]]],
    }


class TestParse:
    def test_minimal(self):
        m, u = mdpfile.parse_document(base_doc())
        assert m.num_states == 2 and u.rect is Rect.NONE
        np.testing.assert_allclose(m.mu, [0.5, 0.5])

    def test_unknown_key(self):
        doc = base_doc() | {"horizon": 3}
        with pytest.raises(mdpfile.MdpFileError, match="horizon"):
            mdpfile.parse_document(doc)

    def test_unknown_uncertainty_key(self):
        doc = base_doc() | {"uncertainty": {"rect": "s", "p": 2, "alpha": [0, 0], "beta": [0, 0], "radius": 1}}
        with pytest.raises(mdpfile.MdpFileError, match="radius"):
            mdpfile.parse_document(doc)

    def test_missing_key(self):
        doc = base_doc()
        del doc["kernel"]
        with pytest.raises(mdpfile.MdpFileError, match="kernel"):
            mdpfile.parse_document(doc)

    def test_shape_mismatch(self):
        doc = base_doc() | {"reward": [[1.0, 2.0], [1.0, 2.0]]}
        with pytest.raises(mdpfile.MdpFileError, match="reward"):
            mdpfile.parse_document(doc)

    def test_inf_norm(self):
        doc = base_doc() | {"uncertainty": {"rect": "sa", "p": "inf", "alpha": [[0.1], [0.1]], "beta": [[0.0], [0.0]]}}
        _, u = mdpfile.parse_document(doc)
        assert u.p == math.inf and u.alpha.shape == (2, 1)

    def test_bad_rect(self):
        doc = base_doc() | {"uncertainty": {"rect": "cube"}}
        with pytest.raises(mdpfile.MdpFileError):
            mdpfile.parse_document(doc)

    def test_not_json(self):
        with pytest.raises(mdpfile.MdpFileError):
            mdpfile.loads("{not json")


class TestRoundTrip:
    @pytest.mark.parametrize("rect,p", [("none", 2.0), ("sa", math.inf), ("s", 1.5)])
    def test_bit_exact(self, rng, tmp_path, rect, p):
        m = make_mdp(rng, 4, 3)
        u = UncertaintySpec.uniform(rect, p, rng.uniform(), rng.uniform(), 4, 3)
        path = tmp_path / "m.json"
        mdpfile.dump(path, m, u)
        m2, u2 = mdpfile.load(path)
        np.testing.assert_array_equal(m2.kernel, m.kernel)
        np.testing.assert_array_equal(m2.reward, m.reward)
        np.testing.assert_array_equal(m2.mu, m.mu)
        assert m2.gamma == m.gamma and u2.rect is u.rect
        if u.rect is not Rect.NONE:
            assert u2.p == u.p
            np.testing.assert_array_equal(u2.alpha, u.alpha)
        assert mdpfile.dumps(m2, u2) == path.read_text()

    def test_inf_encoded_as_text(self, rng):
        m = make_mdp(rng, 2, 2)
        doc = json.loads(mdpfile.dumps(m, UncertaintySpec.uniform("s", math.inf, 0.1, 0.1, 2, 2)))
        assert doc["uncertainty"]["p"] == "inf"
