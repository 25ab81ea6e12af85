import pytest

from agentmeter.actions import (
    Action,
    ActionName,
    UnparsableActionError,
    parse_action,
)


def test_parse_key_value():
    action = parse_action("ACTION: search(query=Danube length)")
    assert action.name is ActionName.SEARCH
    assert action.arguments == {"query": "Danube length"}


def test_parse_bare_argument_uses_primary_key():
    assert parse_action("ACTION: open_url(https://example.org/x)").arguments == {
        "url": "https://example.org/x"
    }
    assert parse_action("ACTION: final_answer(42)").arguments == {"answer": "42"}


def test_parse_quoted_value_keeps_commas():
    action = parse_action('ACTION: final_answer(answer="a, b, c")')
    assert action.arguments == {"answer": "a, b, c"}


def test_parse_multiple_arguments():
    action = parse_action("ACTION: search(query=x, limit=3)")
    assert action.arguments == {"query": "x", "limit": "3"}


def test_parse_ignores_preceding_reasoning():
    text = "I think the answer is on the history page.\n\nACTION: page_down()"
    action = parse_action(text)
    assert action.name is ActionName.PAGE_DOWN
    assert action.arguments == {}


def test_last_directive_wins():
    text = "ACTION: search(query=first)\nchanged my mind\nACTION: final_answer(answer=2)"
    assert parse_action(text).name is ActionName.FINAL_ANSWER


def test_parse_strips_code_fences_and_backticks():
    assert parse_action("`ACTION: page_up()`").name is ActionName.PAGE_UP
    assert parse_action("```\nACTION: search(query=x)\n```").arguments == {"query": "x"}


def test_parse_is_case_tolerant_for_name():
    assert parse_action("ACTION: Final_Answer(answer=Paris)").name is ActionName.FINAL_ANSWER


def test_equals_inside_quoted_value():
    action = parse_action('ACTION: search(query="a=b")')
    assert action.arguments == {"query": "a=b"}


def test_no_directive_raises():
    with pytest.raises(UnparsableActionError, match="no ACTION"):
        parse_action("I will search for the answer now.")


def test_unknown_action_raises():
    with pytest.raises(UnparsableActionError, match="unknown action"):
        parse_action("ACTION: teleport(to=mars)")


def test_two_bare_arguments_raise():
    with pytest.raises(UnparsableActionError):
        parse_action("ACTION: search(one, two)")


def test_final_answer_requires_answer_key():
    with pytest.raises(UnparsableActionError, match="final_answer"):
        parse_action("ACTION: final_answer(text=hi)")
    with pytest.raises(UnparsableActionError, match="final_answer"):
        parse_action("ACTION: final_answer()")


def test_is_terminal():
    assert Action(ActionName.FINAL_ANSWER, {"answer": "x"}).is_terminal
    assert not Action(ActionName.SEARCH, {"query": "x"}).is_terminal


def test_render():
    action = Action(ActionName.SEARCH, {"query": "a", "limit": "2"})
    assert action.render() == "search(query=a, limit=2)"
    assert parse_action(f"ACTION: {action.render()}") == action
