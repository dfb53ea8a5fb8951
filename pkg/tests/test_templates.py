import pytest

from qualityflow.templates import (
    PromptVariant,
    TemplateError,
    default_templates,
    load_templates,
)


class TestDefaultSet:
    def test_shipped_variant_counts(self):
        templates = default_templates()
        counts = {role: len(v) for role, v in templates.variants.items()}
        assert counts == {
            "generator": 6,
            "designer": 5,
            "debugger": 3,
            "clarifier": 3,
            "regenerator": 1,
        }

    def test_indices_are_dense_and_ordered(self):
        templates = default_templates()
        for role, variants in templates.variants.items():
            assert [v.index for v in variants] == list(range(len(variants)))

    def test_variant_wraps_past_the_pool(self):
        templates = default_templates()
        assert templates.variant("regenerator", 2) is templates.variant("regenerator", 0)
        assert templates.variant("generator", 7) is templates.variant("generator", 1)


class TestRendering:
    def test_substitutes_known_placeholders_only(self):
        variant = PromptVariant(
            role="generator",
            index=0,
            template="Task: {statement}\nTests:\n{visible_tests}\nKeep {braces} intact.",
        )
        rendered = variant.render({"statement": "do it", "visible_tests": "assert f(1) == 2"})
        assert "Task: do it" in rendered
        assert "assert f(1) == 2" in rendered
        assert "{braces}" in rendered

    def test_code_braces_survive_substitution(self):
        variant = PromptVariant(
            role="debugger",
            index=0,
            template="{statement}\n{code}\n{feedback}",
        )
        rendered = variant.render(
            {"statement": "s", "code": "d = {'a': 1}", "feedback": "- failed"}
        )
        assert "d = {'a': 1}" in rendered


class TestLoading:
    def _write_full_set(self, directory):
        contents = {
            "generator": "g {statement} {visible_tests}",
            "designer": "d {statement} {visible_tests} {batch}",
            "debugger": "b {statement} {code} {feedback}",
            "clarifier": "c {statement} {context_digest}",
            "regenerator": "r {clarified_statement} {visible_tests} {code}",
        }
        for role, body in contents.items():
            (directory / f"{role}_0.txt").write_text(body)
        return contents

    def test_load_directory(self, tmp_path):
        self._write_full_set(tmp_path)
        templates = load_templates(tmp_path)
        assert templates.variant("generator", 0).template.startswith("g ")

    def test_missing_role_rejected(self, tmp_path):
        self._write_full_set(tmp_path)
        (tmp_path / "clarifier_0.txt").unlink()
        with pytest.raises(TemplateError):
            load_templates(tmp_path)

    def test_sparse_indices_rejected(self, tmp_path):
        self._write_full_set(tmp_path)
        (tmp_path / "generator_2.txt").write_text("g {statement} {visible_tests}")
        with pytest.raises(TemplateError):
            load_templates(tmp_path)

    def test_unknown_placeholder_rejected(self, tmp_path):
        self._write_full_set(tmp_path)
        (tmp_path / "generator_0.txt").write_text("g {statement} {visible_tests} {nope}")
        with pytest.raises(TemplateError):
            load_templates(tmp_path)

    def test_missing_required_placeholder_rejected(self, tmp_path):
        self._write_full_set(tmp_path)
        (tmp_path / "debugger_0.txt").write_text("b {statement} {code}")
        with pytest.raises(TemplateError):
            load_templates(tmp_path)

    def test_missing_directory(self, tmp_path):
        with pytest.raises(TemplateError):
            load_templates(tmp_path / "nope")
