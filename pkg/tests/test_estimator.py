import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from conftest import make_toy_windows
from echogest.estimator import ChannelNormalizer, EchoWindowClassifier


def toy_xy(n_per_class=20, n_classes=2, seed=0, labels=None):
    ws = make_toy_windows(n_per_class=n_per_class, n_classes=n_classes, seed=seed)
    y = ws.y if labels is None else np.asarray(labels)[ws.y]
    return ws.X.astype(np.float64), y


class TestEchoWindowClassifier:
    def make(self, **kw):
        defaults = dict(embed_dim=16, n_blocks=2, n_heads=4, mlp_hidden=32,
                        drop_proj=0.1, drop_cls=0.1, lr0=3e-3, epochs=15,
                        batch_size=8, seed=3)
        defaults.update(kw)
        return EchoWindowClassifier(**defaults)

    def test_fit_predict_separable(self):
        X, y = toy_xy()
        clf = self.make().fit(X, y)
        assert (clf.predict(X) == y).all()

    def test_predict_proba_rows_normalized(self):
        X, y = toy_xy()
        clf = self.make().fit(X, y)
        probs = clf.predict_proba(X)
        assert probs.shape == (len(X), 2)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-6)

    def test_non_contiguous_labels_round_trip(self):
        X, y = toy_xy(labels=[3, 7])
        clf = self.make().fit(X, y)
        np.testing.assert_array_equal(clf.classes_, [3, 7])
        assert set(np.unique(clf.predict(X))) <= {3, 7}
        assert (clf.predict(X) == y).all()

    def test_unfitted_predict_raises(self):
        with pytest.raises(NotFittedError):
            self.make().predict(np.zeros((1, 4, 200, 83)))

    def test_bad_shape_rejected(self):
        with pytest.raises(ValueError):
            self.make().fit(np.zeros((4, 4, 200, 80)), np.zeros(4, dtype=int))

    def test_get_params_set_params_clone(self):
        clf = self.make(embed_dim=24, n_heads=4)
        params = clf.get_params()
        assert params["embed_dim"] == 24
        clf.set_params(epochs=2)
        assert clf.epochs == 2
        cloned = clone(clf)
        assert cloned.get_params() == clf.get_params()

    def test_score_uses_accuracy(self):
        X, y = toy_xy()
        clf = self.make().fit(X, y)
        assert clf.score(X, y) == 1.0


class TestChannelNormalizer:
    def test_fit_transform_standardizes(self):
        X = np.random.default_rng(0).normal(4.0, 3.0, size=(12, 4, 200, 83))
        z = ChannelNormalizer().fit_transform(X)
        for c in range(4):
            assert abs(z[:, c].mean()) < 1e-9
            assert z[:, c].std() == pytest.approx(1.0, abs=1e-9)

    def test_inverse_round_trip(self):
        X = np.random.default_rng(1).normal(2.0, 5.0, size=(6, 4, 200, 83))
        norm = ChannelNormalizer().fit(X)
        np.testing.assert_allclose(norm.inverse_transform(norm.transform(X)), X, atol=1e-9)

    def test_unfitted_transform_raises(self):
        with pytest.raises(NotFittedError):
            ChannelNormalizer().transform(np.zeros((2, 4, 200, 83)))

    def test_clone_contract(self):
        norm = ChannelNormalizer()
        assert clone(norm).get_params() == norm.get_params()
