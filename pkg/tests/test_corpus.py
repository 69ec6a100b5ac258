import pytest

from listterm import analyze, parse_program

from conftest import corpus_files, expected_verdict


@pytest.mark.parametrize("path", corpus_files(), ids=lambda p: p.stem)
def test_expected_verdict(path):
    report = analyze(parse_program(path.read_text()))
    assert report.verdict == expected_verdict(path), report.diagnostic
    if report.verdict == "TERMINATING":
        assert report.certificate_ok
