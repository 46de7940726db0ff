"""Figure savers: real PNG output, reproducible bytes, both report kinds."""

from hatemix.embeddings import SimilarityReport, SimilarityRow
from hatemix.evaluation import ArchitectureResult, ConfusionMatrix, CVReport, Metrics
from hatemix.figures import save_cv_figure, save_similarity_figure

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


def cv_report():
    results = []
    for arch, base in (("cnn1d", 80.0), ("lstm", 75.0)):
        m = Metrics(precision=base, recall=base - 2, f_score=base - 1, accuracy=base + 1)
        results.append(
            ArchitectureResult(
                architecture=arch,
                fold_metrics=(m,),
                fold_confusions=(ConfusionMatrix(tp=1, fp=1, fn=1, tn=1),),
                mean_metrics=m,
                pooled_metrics=m,
            )
        )
    return CVReport(results=tuple(results), metadata={"k": 10, "aggregation": "fold-mean"})


def similarity_report(with_general):
    rows = [
        SimilarityRow("hate", 0.62, 0.31 if with_general else None),
        SimilarityRow("neutral", 0.18, None),
    ]
    return SimilarityReport(reference_word="nafrat", rows=rows)


class TestCVFigure:
    def test_writes_png(self, tmp_path):
        path = tmp_path / "cv.png"
        save_cv_figure(cv_report(), path)
        data = path.read_bytes()
        assert data.startswith(PNG_SIGNATURE)
        assert len(data) > 1000

    def test_rerun_is_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.png", tmp_path / "b.png"
        save_cv_figure(cv_report(), a)
        save_cv_figure(cv_report(), b)
        assert a.read_bytes() == b.read_bytes()


class TestSimilarityFigure:
    def test_with_and_without_general_column(self, tmp_path):
        plain = tmp_path / "plain.png"
        both = tmp_path / "both.png"
        save_similarity_figure(similarity_report(with_general=False), plain)
        save_similarity_figure(similarity_report(with_general=True), both)
        assert plain.read_bytes().startswith(PNG_SIGNATURE)
        assert both.read_bytes().startswith(PNG_SIGNATURE)
        assert plain.read_bytes() != both.read_bytes()

    def test_rerun_is_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.png", tmp_path / "b.png"
        save_similarity_figure(similarity_report(with_general=True), a)
        save_similarity_figure(similarity_report(with_general=True), b)
        assert a.read_bytes() == b.read_bytes()
