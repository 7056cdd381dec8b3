#!/usr/bin/env python3
"""Recomputes project metrics by scanning an events.log file.

Usage: metrics_oracle.py EVENTS_LOG PROJECT_ID
Prints one JSON object with sorted keys.
"""
import json
import sys
import zlib


def read_events(path):
    events = []
    with open(path, "rb") as f:
        for raw in f:
            line = raw.rstrip(b"\n")
            body, _, crc = line.rpartition(b"#")
            if "%08x" % zlib.crc32(body) != crc.decode():
                raise SystemExit("checksum mismatch at line %d" % (len(events) + 1))
            events.append(json.loads(body))
    return events


def lower_median(xs):
    if not xs:
        return 0
    xs = sorted(xs)
    return xs[(len(xs) - 1) // 2]


def scan(events, pid):
    kind_of = {}
    assigned_at = {}
    first_seen = {}
    onboarding = {}
    durations = []
    completed_by_kind = {}
    status = {}
    tested = set()
    debug_ids = set()
    counts = dict(identified=0, tests=0, opened=0, resolved=0, functions=0)

    for e in events:
        k, p, ts = e["kind"], e["payload"], e["ts"]
        if p.get("projectId") != pid:
            continue
        if k == "MicrotaskQueued":
            m = p["microtask"]
            kind_of[m["id"]] = m["kind"]
            if m["kind"] == "DebugFailure":
                debug_ids.add(m["id"])
        elif k == "MicrotaskAssigned":
            assigned_at[p["microtaskId"]] = ts
            first_seen.setdefault(p["workerId"], ts)
        elif k == "SubmissionApplied" and p["outcome"] == "completed":
            mid, wid = p["microtaskId"], p["workerId"]
            kind = kind_of[mid]
            completed_by_kind[kind] = completed_by_kind.get(kind, 0) + 1
            durations.append((ts - assigned_at[mid]) // 1000)
            if wid not in onboarding:
                onboarding[wid] = (ts - first_seen[wid]) // 1000
        elif k == "BehaviorAdded":
            counts["identified"] += 1
            status[p["behavior"]["id"]] = "Identified"
        elif k == "TestStored":
            counts["tests"] += 1
            bid = p["test"]["behaviorId"]
            tested.add(bid)
            status[bid] = "Tested"
        elif k == "SuiteRan":
            for bid in p.get("passing", []):
                status[bid] = "Passing"
        elif k == "ConflictOpened":
            counts["opened"] += 1
            for side in ("a", "b"):
                status[p["conflict"][side]["behaviorId"]] = "Conflicted"
        elif k == "ConflictResolved":
            counts["resolved"] += 1
        elif k == "BehaviorRetired":
            status[p["behaviorId"]] = "Retired"
        elif k == "FunctionCompleted":
            counts["functions"] += 1

    return {
        "behaviorsIdentified": counts["identified"],
        "behaviorsPassing": sum(1 for s in status.values() if s == "Passing"),
        "behaviorsTested": len(tested),
        "completionSecondsMedian": lower_median(durations),
        "conflictsOpened": counts["opened"],
        "conflictsResolved": counts["resolved"],
        "countsByKind": completed_by_kind,
        "debugTasks": len(debug_ids),
        "functionsImplemented": counts["functions"],
        "microtasksCompleted": sum(completed_by_kind.values()),
        "onboardingSeconds": onboarding,
        "testsWritten": counts["tests"],
    }


def main():
    if len(sys.argv) != 3:
        raise SystemExit(__doc__)
    print(json.dumps(scan(read_events(sys.argv[1]), sys.argv[2]), sort_keys=True))


if __name__ == "__main__":
    main()
