import pytest

from src.dataio import DatasetSplit, split_for_training, synthesize
from src.evalsuite.runners import (
    AblationRunner,
    BetaSweepRunner,
    ExperimentSetup,
    beta_sweep,
    evaluate,
    with_beta,
)
from src.exceptions import ConfigurationError
from src.modeling import ModelParams
from src.models.domain import Ablation, EvalConfig, EvalTask, SimilarityMode, TrainConfig
from test.unit_test.conftest import TINY_GENERATOR, TINY_MODEL

FOUR_TYPES = TINY_GENERATOR.model_copy(update={"num_samples": 80, "num_relation_types": 4, "max_edges_per_type": 20})
QUICK_EVAL = EvalConfig(num_negatives=10, type_top_k=2, validity_epochs=40, chunk_size=32)
QUICK_TRAIN = TrainConfig(model=TINY_MODEL, batch_size=8, learning_rate=5e-3, max_epochs=1, seed=1)


@pytest.fixture(scope="module")
def four_type_split() -> DatasetSplit:
    dataset = synthesize(FOUR_TYPES)
    return split_for_training(dataset.samples, dataset.edges, 0.2, 0.0, seed=7)


class TestEvaluate:
    """All three tasks on held-out edges."""

    def test_full_report(self, four_type_split: DatasetSplit) -> None:
        """Every task fills its metrics, one value per similarity mode."""
        params = ModelParams.init(TINY_MODEL)
        report = evaluate(params, four_type_split, QUICK_EVAL, num_types=4, config_hash="feed")
        modes = {mode.value for mode in SimilarityMode}
        assert set(report.hit_at_k) == modes
        assert set(report.type_top_k) == modes
        assert report.validity_accuracy is not None
        assert report.query_count == report.type_query_count == len(four_type_split.test)
        assert report.validity_example_count == 2 * len(four_type_split.test)
        assert report.config_hash == "feed"
        assert report.beta == params.attention.beta
        assert report.parameter_count == params.parameter_count()

    def test_single_task(self, four_type_split: DatasetSplit) -> None:
        """Tasks that are not requested stay empty."""
        report = evaluate(ModelParams.init(TINY_MODEL), four_type_split, QUICK_EVAL, EvalTask.TYPE)
        assert report.hit_at_k == {}
        assert report.validity_accuracy is None
        assert report.type_query_count == len(four_type_split.test)

    def test_deterministic(self, four_type_split: DatasetSplit) -> None:
        params = ModelParams.init(TINY_MODEL)
        cfg = QUICK_EVAL.model_copy(update={"modes": (SimilarityMode.AVG,)})
        assert evaluate(params, four_type_split, cfg) == evaluate(params, four_type_split, cfg)

    def test_workers_do_not_change_metrics(self, four_type_split: DatasetSplit) -> None:
        params = ModelParams.init(TINY_MODEL)
        cfg = QUICK_EVAL.model_copy(update={"modes": (SimilarityMode.TI,)})
        threaded = cfg.model_copy(update={"workers": 3, "chunk_size": 9})
        serial = evaluate(params, four_type_split, cfg, EvalTask.RETRIEVAL)
        assert serial.hit_at_k == evaluate(params, four_type_split, threaded, EvalTask.RETRIEVAL).hit_at_k

    def test_needs_held_out_edges(self, four_type_split: DatasetSplit) -> None:
        empty = DatasetSplit(samples=four_type_split.samples, train=four_type_split.train, test=())
        with pytest.raises(ConfigurationError):
            evaluate(ModelParams.init(TINY_MODEL), empty, QUICK_EVAL)


class TestRunners:
    """Multi-variant experiments."""

    def test_with_beta(self) -> None:
        assert with_beta(QUICK_TRAIN, 0.2).model.beta == 0.2
        with pytest.raises(ConfigurationError):
            with_beta(QUICK_TRAIN, 1.5)

    def test_sweep_rejects_out_of_range_beta(self, four_type_split: DatasetSplit) -> None:
        setup = ExperimentSetup(split=four_type_split, train=QUICK_TRAIN, evaluation=QUICK_EVAL)
        with pytest.raises(ConfigurationError):
            BetaSweepRunner(setup, [0.0, -0.1])

    @pytest.mark.slow
    def test_beta_sweep(self, four_type_split: DatasetSplit) -> None:
        """One report per coefficient, in order."""
        setup = ExperimentSetup(split=four_type_split, train=QUICK_TRAIN, evaluation=QUICK_EVAL, num_types=4)
        reports = beta_sweep(setup, [0.0, 1.0])
        assert [report.beta for report in reports] == [0.0, 1.0]
        assert all(report.inter_pair_count is not None for report in reports)

    @pytest.mark.slow
    def test_ablation_rows(self, four_type_split: DatasetSplit) -> None:
        """Rows are labelled by setting and the no-inter-edge variant trains without inter pairs."""
        setup = ExperimentSetup(split=four_type_split, train=QUICK_TRAIN, evaluation=QUICK_EVAL, num_types=4)
        reports = AblationRunner(setup, [Ablation.FULL, Ablation.NO_INTER_EDGE]).run()
        assert [report.ablation for report in reports] == ["full", "no_inter_edge"]
        assert reports[0].inter_pair_count > 0
        assert reports[1].inter_pair_count == 0
