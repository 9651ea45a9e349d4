import numpy as np
import pytest

import bannercloak as bc


@pytest.fixture(scope="session")
def visual_space():
    return bc.default_visual_space()


def _http_banner(bid, words, label):
    body = " ".join(words)
    raw = f"HTTP/1.1 200 OK\nServer: demo\n\n<html><p>{body}</p></html>"
    return bc.Banner(bid, "http", raw, label)


@pytest.fixture(scope="session")
def toy_attack_setup():
    """Three-label corpus: two labels hinge on one body keyword each, the
    third is the keyword-free fallback.  Substituting the keyword with any
    in-bucket neighbor makes the banner look generic and flips the label."""
    fill = "device online portal admin panel network status uptime len mode entry log view"
    corpus = []
    labels = {
        "alpha": bc.Labels(type="camera", manufacturer="acme", product="alpha-cam"),
        "beta": bc.Labels(type="camera", manufacturer="acme", product="beta-cam"),
        "": bc.Labels(type="camera", manufacturer="acme", product="generic-cam"),
    }
    for i in range(5):
        for key, lab in labels.items():
            words = [f"{key} {fill} unit{i}".strip()]
            corpus.append(_http_banner(f"{key or 'g'}{i}", words, lab))
    scanner = bc.train_learning_scanner(
        corpus, "product", bc.TrainConfig(holdout=0.0, epochs=500)
    )
    emb = bc.train_embedding(corpus, dim=8, epochs=40, seed=0, min_count=1)
    space = bc.build_semantic_space(corpus, scanner, 6, granularity="product")
    return corpus, scanner, emb, space


@pytest.fixture(scope="session")
def cooc_fixture_corpus():
    """Ten banners: 'dcs-930l' always appears with 'd-link'; 'hp' never
    does."""
    corpus = []
    cam = bc.Labels(type="camera", manufacturer="d-link", product="dcs-930l")
    prn = bc.Labels(type="printer", manufacturer="hp", product="laserjet")
    for i in range(5):
        corpus.append(
            bc.Banner(f"c{i}", "http", f"dcs-930l d-link camera online ready unit {i}", cam)
        )
        corpus.append(
            bc.Banner(f"p{i}", "http", f"hp laserjet printer online ready unit {i}", prn)
        )
    return corpus


class StubScorer:
    """Fixed-confidence scorer: looks up F_y from a text -> probs table."""

    def __init__(self, labels, table, default):
        self.labels = list(labels)
        self.table = dict(table)
        self.default = np.asarray(default, dtype=float)

    def predict(self, text):
        probs = np.asarray(self.table.get(text, self.default), dtype=float)
        return self.labels[int(np.argmax(probs))], probs
