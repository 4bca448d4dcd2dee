import numpy as np
import pytest

from ecgsqa.synth import CorpusSpec, build_corpus, save_corpus

SMALL = dict(n_records=6, duration_s=90.0, lead_in_s=20.0, block_s=20.0)


def small_spec(name, seed, fs=360.0, weights=None, **kw):
    weights = weights or {"muscle_artifact": 1.0, "electrode_motion": 0.7}
    return CorpusSpec(name=name, seed=seed, fs=fs, noise_weights=weights, **{**SMALL, **kw})


@pytest.fixture(scope="session")
def corpus_root(tmp_path_factory):
    """Three small on-disk datasets with distinct record ids."""
    root = tmp_path_factory.mktemp("corpora")
    save_corpus(build_corpus(small_spec("a", 1)), root / "A")
    save_corpus(build_corpus(small_spec("b", 2, fs=500.0,
                                        weights={"muscle_artifact": 0.5, "electrode_motion": 1.0})),
                root / "B")
    save_corpus(build_corpus(small_spec("c", 3, weights={"electrode_motion": 1.0})), root / "C")
    return root


def write_config(path, body):
    path.write_text(body.strip() + "\n", encoding="utf-8")
    return path


@pytest.fixture
def three_dataset_config(corpus_root, tmp_path):
    return write_config(tmp_path / "run.ini", f"""
[run]
seed = 3
output_dir = {tmp_path / 'out'}
model = rforest

[model.rforest]
n_trees = 10

[dataset.A]
path = {corpus_root / 'A'}

[dataset.B]
path = {corpus_root / 'B'}

[dataset.C]
path = {corpus_root / 'C'}
""")


@pytest.fixture
def rng():
    return np.random.default_rng(0)


# ------------------------------------------------ acceptance summary lines

_VERDICTS = {}


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    key = props["criterion"]
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        outcome = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        _VERDICTS[key] = f"criterion {key:>2}: {outcome}  {props.get('measured', '')}".rstrip()


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(_VERDICTS, key=int):
            terminalreporter.write_line(_VERDICTS[key])
