#!/usr/bin/env python3
"""Writes the shipped simulator scenarios as canonical JSON."""

import json
import pathlib
import sys

LATENCY = {"minMs": 60000, "maxMs": 420000}


def canonical(value):
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def field(name, type_):
    return {"name": name, "type": type_}


def endpoint(method, path, name, description, params, response):
    return {
        "method": method,
        "path": path,
        "name": name,
        "description": description,
        "requestSchema": [field(n, t) for n, t in params],
        "responseSchema": [field(n, t) for n, t in response],
    }


def pseudo(name, params, returns, description):
    return {
        "name": name,
        "params": [field(n, t) for n, t in params],
        "returnType": returns,
        "description": description,
    }


def function(behaviors, default, pseudo_calls=()):
    """behaviors: list of (statement, [(args, expected), ...])."""
    entries = {}
    out = []
    for statement, cases in behaviors:
        assertions = []
        for args, expected in cases:
            key = canonical(args)
            if key in entries and canonical(entries[key]) != canonical(expected):
                raise SystemExit(f"oracle contradiction at {key}")
            if canonical(expected) != canonical(default):
                entries[key] = expected
            assertions.append({"args": args, "expected": expected})
        out.append({"statement": statement, "assertions": assertions})
    table = {
        "entries": [{"args": json.loads(k), "value": v} for k, v in sorted(entries.items())],
        "default": default,
    }
    result = {"behaviors": out, "table": table}
    if pseudo_calls:
        result["pseudoCalls"] = list(pseudo_calls)
    return result


def todo(id_, title, done=False):
    return {"id": id_, "title": title, "done": done}


VALIDATE_TITLE = pseudo("validateTitle", [("title", "string")], "boolean",
                        "true when a title is non-blank and at most 40 characters")
FIND_TODO = pseudo("findTodo", [("id", "number")], "object",
                   "the stored todo with this id, or null")


def todo_small():
    spec = {
        "name": "todo",
        "endpoints": [
            endpoint("POST", "/todos", "addTodo", "create a todo from a title",
                     [("title", "string")], [("todo", "object")]),
            endpoint("GET", "/todos", "listTodos", "list all todos", [],
                     [("todos", "list")]),
            endpoint("PUT", "/todos/complete", "completeTodo", "mark a todo done",
                     [("id", "number")], [("todo", "object")]),
            endpoint("DELETE", "/todos", "deleteTodo", "remove a todo",
                     [("id", "number")], [("deleted", "boolean")]),
        ],
    }
    oracle = {
        "addTodo": function([
            ("given a title, when addTodo is called, then the new todo is returned",
             [(["milk"], todo(1, "milk"))]),
            ("given an empty title, when addTodo is called, then an error is returned",
             [([""], {"error": "title required"})]),
            ("given a blank title, when addTodo is called, then an error is returned",
             [(["   "], {"error": "title required"})]),
        ], {"error": "invalid title"}, [VALIDATE_TITLE]),
        "listTodos": function([
            ("given no todos, when listTodos is called, then an empty list is returned",
             [([], [])]),
            ("given a fresh service, when listTodos is called, then no todo is done",
             [([], [])]),
        ], []),
        "completeTodo": function([
            ("given todo 1 exists, when completeTodo(1) is called, then it is done",
             [([1], todo(1, "milk", True))]),
            ("given no todo 99, when completeTodo(99) is called, then not found",
             [([99], {"error": "not found"})]),
            ("given a negative id, when completeTodo is called, then the id is invalid",
             [([-1], {"error": "invalid id"})]),
        ], {"error": "not found"}, [FIND_TODO]),
        "deleteTodo": function([
            ("given todo 1 exists, when deleteTodo(1) is called, then it is deleted",
             [([1], True)]),
            ("given no todo 99, when deleteTodo(99) is called, then nothing is deleted",
             [([99], False)]),
        ], False),
        "validateTitle": function([
            ("given a word, when validateTitle is called, then it is valid",
             [(["milk"], True)]),
            ("given an empty string, when validateTitle is called, then it is invalid",
             [([""], False)]),
        ], False),
        "findTodo": function([
            ("given todo 1 exists, when findTodo(1) is called, then it is returned",
             [([1], todo(1, "milk"))]),
            ("given no todo 99, when findTodo(99) is called, then null is returned",
             [([99], None)]),
        ], None),
    }
    return {
        "name": "todo-small",
        "seed": 42,
        "maxSteps": 50 * 40,
        "projectSpec": spec,
        "oracle": oracle,
        "workers": [{"count": 5, "accuracyP": 1, "skipP": 0, "latency": LATENCY}],
    }


def todo_paper_scale():
    endpoints = [
        ("POST", "/todos", "addTodo", [("title", "string")]),
        ("GET", "/todos", "listTodos", [("filter", "string")]),
        ("GET", "/todos/one", "getTodo", [("id", "number")]),
        ("PUT", "/todos", "renameTodo", [("id", "number"), ("title", "string")]),
        ("PUT", "/todos/complete", "completeTodo", [("id", "number")]),
        ("DELETE", "/todos", "deleteTodo", [("id", "number")]),
        ("DELETE", "/todos/completed", "clearCompleted", [("confirm", "boolean")]),
        ("GET", "/todos/count", "countTodos", [("filter", "string")]),
    ]
    helpers = {
        "validateTitle": (["addTodo", "renameTodo"], [("title", "string")], "boolean"),
        "normalizeTitle": (["addTodo"], [("title", "string")], "string"),
        "findTodo": (["getTodo", "completeTodo", "deleteTodo"], [("id", "number")], "object"),
        "applyFilter": (["listTodos", "countTodos"], [("filter", "string")], "list"),
        "nextId": (["addTodo"], [("current", "number")], "number"),
        "formatTodo": (["getTodo"], [("id", "number")], "object"),
    }
    store = [todo(1, "milk"), todo(2, "bread", True), todo(3, "eggs")]

    behaviors = {
        "addTodo": ([
            ("a valid title creates a todo", [(["milk"], todo(4, "milk"))]),
            ("an empty title is rejected", [([""], {"error": "title required"})]),
            ("surrounding spaces are trimmed", [([" tea "], todo(4, "tea"))]),
        ], {"error": "invalid title"}),
        "listTodos": ([
            ("filter all lists every todo", [(["all"], store)]),
            ("filter done lists completed todos", [(["done"], [store[1]])]),
            ("filter open lists pending todos", [(["open"], [store[0], store[2]])]),
        ], []),
        "getTodo": ([
            ("an existing id returns the todo", [([1], store[0])]),
            ("a missing id is not found", [([99], {"error": "not found"})]),
            ("a completed todo shows done", [([2], store[1])]),
        ], {"error": "not found"}),
        "renameTodo": ([
            ("renaming an existing todo returns it", [([1, "oat milk"], todo(1, "oat milk"))]),
            ("renaming to empty is rejected", [([1, ""], {"error": "title required"})]),
            ("renaming a missing todo is not found", [([99, "x"], {"error": "not found"})]),
        ], {"error": "not found"}),
        "completeTodo": ([
            ("completing a pending todo marks it done", [([1], todo(1, "milk", True))]),
            ("completing a done todo keeps it done", [([2], store[1])]),
            ("completing a missing todo is not found", [([99], {"error": "not found"})]),
        ], {"error": "not found"}),
        "deleteTodo": ([
            ("deleting an existing todo succeeds", [([1], True)]),
            ("deleting a missing todo fails", [([99], False)]),
            ("deleting a completed todo succeeds", [([2], True)]),
        ], False),
        "clearCompleted": ([
            ("confirmed clear removes completed todos", [([True], 1)]),
            ("unconfirmed clear removes nothing", [([False], 0)]),
        ], 0),
        "countTodos": ([
            ("count all counts every todo", [(["all"], 3)]),
            ("count done counts completed todos", [(["done"], 1)]),
            ("count open counts pending todos", [(["open"], 2)]),
        ], 0),
        "validateTitle": ([
            ("a word is valid", [(["milk"], True)]),
            ("an empty string is invalid", [([""], False)]),
            ("only spaces is invalid", [(["   "], False)]),
        ], False),
        "normalizeTitle": ([
            ("spaces are trimmed", [([" tea "], "tea")]),
            ("a clean title is unchanged", [(["milk"], "milk")]),
            ("inner spaces collapse", [(["a  b"], "a b")]),
        ], ""),
        "findTodo": ([
            ("id 1 is found", [([1], store[0])]),
            ("id 2 is found", [([2], store[1])]),
            ("id 99 is missing", [([99], None)]),
        ], None),
        "applyFilter": ([
            ("all keeps everything", [(["all"], store)]),
            ("done keeps completed", [(["done"], [store[1]])]),
            ("open keeps pending", [(["open"], [store[0], store[2]])]),
        ], []),
        "nextId": ([
            ("the next id follows the current maximum", [([3], 4)]),
            ("an empty store starts at one", [([0], 1)]),
        ], 1),
        "formatTodo": ([
            ("a pending todo renders unchecked", [([1], {"text": "[ ] milk"})]),
            ("a done todo renders checked", [([2], {"text": "[x] bread"})]),
            ("a missing todo renders nothing", [([99], None)]),
        ], None),
    }

    declared = {}
    for name, (callers, params, returns) in helpers.items():
        for caller in callers:
            declared.setdefault(caller, []).append(
                pseudo(name, params, returns, f"helper {name}"))

    spec = {
        "name": "todo",
        "endpoints": [
            endpoint(method, path, name, f"{name} endpoint", params, [("result", "object")])
            for method, path, name, params in endpoints
        ],
    }
    oracle = {}
    for name, (items, default) in behaviors.items():
        statements = [(f"given the seeded store, when {name} is called, then {text}", cases)
                      for text, cases in items]
        oracle[name] = function(statements, default, declared.get(name, ()))
    minimal = sum(2 * len(items) + 2 for items, _ in behaviors.values())
    return {
        "name": "todo-paper-scale",
        "seed": 42,
        "maxSteps": 50 * minimal,
        "projectSpec": spec,
        "oracle": oracle,
        "workers": [{"count": 9, "accuracyP": 1, "skipP": 0, "latency": LATENCY}],
    }


def main():
    out = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "scenarios")
    out.mkdir(parents=True, exist_ok=True)
    for scenario in (todo_small(), todo_paper_scale()):
        (out / f"{scenario['name']}.json").write_text(canonical(scenario) + "\n")


if __name__ == "__main__":
    main()
