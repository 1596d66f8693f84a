"""Smoke test for the reviewbomb extension module.

Build and install first, e.g. `maturin build --release -m crates/python/Cargo.toml` and
`pip install target/wheels/reviewbomb-*.whl`, then run `python python/smoke_test.py`.
"""

import json
import pathlib
import tempfile

import reviewbomb

ROOT = pathlib.Path(__file__).resolve().parent.parent
FIXTURE = ROOT / "crates" / "core" / "tests" / "data" / "synthetic_reviews.csv"


def check_helpers():
    assert reviewbomb.tokenize("The Refund is a LIE") == ["refund", "lie"]
    decision, confidence = reviewbomb.detect_english(
        "The company lied to the fans and I want my money back."
    )
    assert decision == "english", (decision, confidence)
    assert reviewbomb.label_score(1.0) == "RB"
    assert reviewbomb.label_score(1.1) == "NonRB"

    labels = ["RB"] * 20 + ["NonRB"] * 80
    train, test = reviewbomb.stratified_split(labels, 0.2, 42)
    assert sorted(train + test) == list(range(100))
    assert sum(labels[i] == "RB" for i in test) == 4
    folds = reviewbomb.kfold_indices(labels, 5, 42)
    assert sorted(i for f in folds for i in f) == list(range(100))

    m = reviewbomb.compute_metrics(["RB", "RB", "NonRB"], ["RB", "NonRB", "NonRB"])
    assert m["accuracy"] == 2 / 3
    assert m["confusion_counts"] == [[1, 1], [0, 1]]


def check_models():
    rb = ["greedy company wants money, refund now", "the publisher lied, refund please",
          "money grab from a greedy company", "they lied about everything, refund"]
    ok = ["fun combat and a lovely soundtrack", "great story with clever puzzles",
          "the soundtrack and combat are fun", "clever level design and a great story"]
    texts, labels = rb + ok, ["RB"] * 4 + ["NonRB"] * 4
    vec = reviewbomb.Vectorizer.fit(texts, max_features=50)
    assert len(vec) == len(vec.terms) and "refund" in vec.terms
    nb = reviewbomb.Model.train_mnb(vec, texts, labels, alpha=0.1)
    assert nb.predict("refund the money, greedy liars")[0] == "RB"
    assert nb.predict("fun story and great combat")[0] == "NonRB"
    ranking = nb.rank_terms("distinctive", 5)
    assert len(ranking) == 5 and ranking[0]["distinctiveness"] > 0
    lr = reviewbomb.Model.train_logreg(vec, texts, labels, lam=0.01)
    assert lr.kind == "logreg"
    assert lr.predict("greedy company refund")[0] == "RB"


def check_pipeline():
    with tempfile.TemporaryDirectory() as tmp:
        out = pathlib.Path(tmp) / "out"
        manifest = reviewbomb.run("pipeline", input=str(FIXTURE), out_dir=str(out))
        names = {a["name"] for a in manifest["artifacts"]}
        assert {"corpus.jsonl", "model_mnb.json", "wordcloud.svg"} <= names
        report = json.loads((out / "eval_report.json").read_text())
        assert report["models"]["mnb"]["holdout"]["accuracy"] > 0.8

        model = reviewbomb.Model.load(str(out), "mnb")
        preds = model.predict_many(["The greedy company lied and I want a refund."])
        assert preds[0]["label"] == "RB"
        try:
            reviewbomb.run("train", input=str(pathlib.Path(tmp) / "missing.jsonl"),
                           out_dir=str(pathlib.Path(tmp) / "never"))
        except FileNotFoundError:
            pass
        else:
            raise AssertionError("missing input accepted")
        config = json.loads(reviewbomb.default_config())
        assert config["max_features"] == 1000


if __name__ == "__main__":
    check_helpers()
    check_models()
    check_pipeline()
    print("reviewbomb smoke test passed")
