import pytest
from hypothesis import given
from hypothesis import strategies as st

from chronodivide.corpus import (
    Document,
    SegmentationPolicy,
    load_corpus,
    segment_samples,
    sentence_content_length,
    split_sentences,
    write_manifest,
)
from chronodivide.errors import CorpusError, ShortSampleWarning


def make_doc(ordinal: int, text: str) -> Document:
    return Document(id=f"doc{ordinal:03d}", ordinal=ordinal, text=text)


class TestLoadCorpus:
    def test_directory_lexicographic_order(self, tmp_path):
        for name in ("002.txt", "010.txt", "001.txt"):
            (tmp_path / name).write_text("text " + name, encoding="utf-8")
        docs = load_corpus(tmp_path)
        assert [d.id for d in docs] == ["001.txt", "002.txt", "010.txt"]
        assert [d.ordinal for d in docs] == [0, 1, 2]

    def test_manifest_preserves_order(self, tmp_path):
        (tmp_path / "a.txt").write_text("alpha", encoding="utf-8")
        (tmp_path / "b.txt").write_text("beta", encoding="utf-8")
        manifest = tmp_path / "manifest"
        write_manifest(manifest, ["b.txt", "a.txt"])
        docs = load_corpus(manifest)
        assert [d.id for d in docs] == ["b.txt", "a.txt"]
        assert [d.text for d in docs] == ["beta", "alpha"]

    def test_manifest_comments_and_blanks(self, tmp_path):
        (tmp_path / "a.txt").write_text("alpha", encoding="utf-8")
        (tmp_path / "m").write_text("# comment\n\na.txt\n", encoding="utf-8")
        docs = load_corpus(tmp_path / "m")
        assert len(docs) == 1

    def test_empty_directory_errors(self, tmp_path):
        with pytest.raises(CorpusError, match="empty corpus"):
            load_corpus(tmp_path)

    def test_missing_locator_errors(self, tmp_path):
        with pytest.raises(CorpusError, match="does not exist"):
            load_corpus(tmp_path / "nope")

    def test_duplicate_manifest_entry_errors(self, tmp_path):
        (tmp_path / "a.txt").write_text("alpha", encoding="utf-8")
        (tmp_path / "m").write_text("a.txt\na.txt\n", encoding="utf-8")
        with pytest.raises(CorpusError, match="duplicate"):
            load_corpus(tmp_path / "m")

    def test_invalid_utf8_errors(self, tmp_path):
        (tmp_path / "bad.txt").write_bytes(b"\xff\xfe\x00abc")
        with pytest.raises(CorpusError, match="UTF-8"):
            load_corpus(tmp_path)

    def test_whitespace_only_file_errors(self, tmp_path):
        (tmp_path / "a.txt").write_text("   \n ", encoding="utf-8")
        with pytest.raises(CorpusError, match="empty"):
            load_corpus(tmp_path)


class TestSplitSentences:
    def test_cjk_terminators(self):
        assert split_sentences("甲。乙！") == ["甲。", "乙！"]
        assert [sentence_content_length(s) for s in split_sentences("甲。乙！")] == [1, 1]

    def test_empty(self):
        assert split_sentences("") == []

    def test_trailing_run(self):
        assert split_sentences("甲乙丙") == ["甲乙丙"]
        assert sentence_content_length("甲乙丙") == 3

    def test_ascii_terminators(self):
        assert split_sentences("ab. cd? e") == ["ab.", " cd?", " e"]

    def test_partition_is_exact(self):
        text = "一二三。四五！六七？八…九；十"
        assert "".join(split_sentences(text)) == text

    @given(st.text(alphabet="甲乙。！?x .", max_size=60))
    def test_resplitting_each_sentence_is_identity(self, text):
        for sentence in split_sentences(text):
            assert split_sentences(sentence) == [sentence]

    @given(st.text(alphabet="甲乙。！?x .", max_size=60))
    def test_concatenation_recovers_text(self, text):
        assert "".join(split_sentences(text)) == text


class TestSegmentSamples:
    def test_balanced_experiment_shape(self):
        # 120 documents; the last 40 split in half; 60 + 60 labeled samples
        sentence = "零一二三四五六七八九" * 3 + "。"
        docs = [make_doc(i, sentence * 40) for i in range(120)]
        policy = SegmentationPolicy(
            min_chars=100, balance_mode="split_halves", balance_range=(80, 119)
        )
        labels = {(0, 59): "A", (90, 119): "B"}
        samples = segment_samples(docs, policy, labels)
        assert len(samples) == 160
        assert sum(1 for s in samples if s.class_tag == "A") == 60
        assert sum(1 for s in samples if s.class_tag == "B") == 60
        assert [s.ordinal for s in samples] == list(range(160))

    def test_none_mode_identity(self):
        docs = [make_doc(i, "甲乙丙丁。" * 300) for i in range(3)]
        samples = segment_samples(docs, SegmentationPolicy(min_chars=1000))
        assert len(samples) == 3
        assert all(s.part_index == 0 for s in samples)
        assert [s.text for s in samples] == [d.text for d in docs]

    def test_duplicate_mode(self):
        doc = make_doc(0, "甲乙丙。" * 375)  # 1500 chars
        policy = SegmentationPolicy(
            min_chars=1000, balance_mode="duplicate", balance_range=(0, 0)
        )
        samples = segment_samples([doc], policy)
        assert len(samples) == 2
        assert samples[0].text == samples[1].text == doc.text
        assert [s.part_index for s in samples] == [0, 1]

    def test_split_halves_concatenation_recovers_document(self):
        text = ("短句。" * 100) + ("更长的句子在这里。" * 80)
        doc = make_doc(0, text)
        policy = SegmentationPolicy(
            min_chars=100, balance_mode="split_halves", balance_range=(0, 0)
        )
        first, second = segment_samples([doc], policy)
        assert first.text + second.text == text
        assert first.text.endswith("。")

    def test_split_near_midpoint(self):
        text = "焉哉。" * 400  # 1200 chars, boundaries every 3
        doc = make_doc(0, text)
        policy = SegmentationPolicy(
            min_chars=100, balance_mode="split_halves", balance_range=(0, 0)
        )
        first, second = segment_samples([doc], policy)
        assert abs(len(first.text) - len(second.text)) <= 3

    def test_split_halves_too_short_errors(self):
        doc = make_doc(0, "甲。乙。丙。")
        policy = SegmentationPolicy(
            min_chars=100, balance_mode="split_halves", balance_range=(0, 0)
        )
        with pytest.raises(CorpusError, match="split_halves"):
            segment_samples([doc], policy)

    def test_single_sentence_document_cannot_split(self):
        doc = make_doc(0, "甲" * 500)  # long but no internal boundary
        policy = SegmentationPolicy(
            min_chars=100, balance_mode="split_halves", balance_range=(0, 0)
        )
        with pytest.raises(CorpusError, match="single sentence"):
            segment_samples([doc], policy)

    def test_lopsided_boundaries_warn_but_split(self):
        # only boundary far from midpoint and below min_chars on one side
        text = "短。" + "長" * 400
        doc = make_doc(0, text)
        policy = SegmentationPolicy(
            min_chars=100, balance_mode="split_halves", balance_range=(0, 0)
        )
        with pytest.warns(ShortSampleWarning):
            first, second = segment_samples([doc], policy)
        assert first.text + second.text == text

    def test_short_document_warns_but_produces(self):
        docs = [make_doc(0, "短。")]
        with pytest.warns(ShortSampleWarning):
            samples = segment_samples(docs, SegmentationPolicy(min_chars=1000))
        assert len(samples) == 1

    def test_overlapping_labels_error(self):
        docs = [make_doc(i, "甲乙丙。" * 300) for i in range(10)]
        with pytest.raises(CorpusError, match="overlap"):
            segment_samples(
                docs, SegmentationPolicy(), {(0, 5): "A", (5, 9): "B"}
            )

    def test_balance_range_out_of_bounds(self):
        docs = [make_doc(i, "甲乙丙。" * 300) for i in range(3)]
        policy = SegmentationPolicy(
            min_chars=10, balance_mode="duplicate", balance_range=(0, 5)
        )
        with pytest.raises(CorpusError, match="balance_range"):
            segment_samples(docs, policy)

    def test_sample_order_refines_document_order(self):
        docs = [make_doc(i, "甲乙丙丁。" * 300) for i in range(6)]
        policy = SegmentationPolicy(
            min_chars=10, balance_mode="split_halves", balance_range=(2, 4)
        )
        samples = segment_samples(docs, policy)
        doc_sequence = [s.source_document for s in samples]
        assert doc_sequence == sorted(doc_sequence)
        for earlier, later in zip(samples, samples[1:]):
            if earlier.source_document == later.source_document:
                assert earlier.part_index < later.part_index
