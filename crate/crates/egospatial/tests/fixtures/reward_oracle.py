#!/usr/bin/env python3
"""Reference reward implementation used to freeze conformance.json.

Written from the scoring rules alone, with regular expressions instead of a
hand-rolled scanner, so that it shares no code paths with the Rust scorer.

    python3 reward_oracle.py > conformance.json
"""

import json
import math
import random
import re
import sys

MAX_CHARS = 200
TRAILING = " .!?;:,"

# after normalization: lowercase, single spaces, no trailing punctuation
WORD = r"[a-z0-9_\u0080-\U0010ffff]"
ACTION_RE = re.compile(
    rf"(?<!{WORD})(?:"
    rf"move (forward|backward|left|right) ([0-9]+(?:\.[0-9]+)?) ?meters?"
    rf"|turn (left|right) ([0-9]+(?:\.[0-9]+)?) ?degrees?"
    rf")(?!{WORD})"
)
BOX_BODY = r"\[(-?[0-9]+), ?(-?[0-9]+), ?(-?[0-9]+), ?(-?[0-9]+)\]"
BOX_EXACT = re.compile(rf"{BOX_BODY}")
BOX_ANY = re.compile(BOX_BODY)

MOVE_KINDS = {"forward": "F", "backward": "B", "left": "SL", "right": "SR"}
TURN_KINDS = {"left": "TL", "right": "TR"}
ROTATIONS = {"TL", "TR"}


def normalize(raw):
    text = " ".join(raw.split())
    return text.lower().rstrip(TRAILING)


def actions(text):
    out = []
    for m in ACTION_RE.finditer(text):
        if m.group(1):
            out.append((MOVE_KINDS[m.group(1)], float(m.group(2))))
        else:
            out.append((TURN_KINDS[m.group(3)], float(m.group(4))))
    return out


def num_credit(pred, gt, kind):
    lo, hi = (5.0, 90.0) if kind in ROTATIONS else (0.5, 5.0)
    err = abs(pred - gt)
    if err <= lo:
        return 1.0
    if err >= hi:
        return 0.0
    return 1.0 - (err - lo) / (hi - lo)


def score_motion(raw, gt):
    cands = actions(normalize(raw))
    fmt = 1.0 if cands else 0.0
    same = [v for k, v in cands if k == gt[0]]
    sem = 1.0 if same else 0.0
    num = max((num_credit(v, gt[1], gt[0]) for v in same), default=0.0)
    return dict(reward=0.10 * fmt + 0.35 * sem + 0.55 * num, fmt=fmt, sem=sem, num=num)


def score_sequence(raw, gt):
    pred = actions(normalize(raw))
    n, m = len(pred), len(gt)
    fmt = 1.0 if n else 0.0
    kinds = set(k for k, _ in pred) | set(k for k, _ in gt)
    overlap = sum(
        min(sum(1 for k, _ in pred if k == x), sum(1 for k, _ in gt if k == x)) for x in kinds
    )
    sem = overlap / max(n, m, 1)
    hits = [(p, g) for p, g in zip(pred, gt) if p[0] == g[0]]
    ord_ = len(hits) / m
    num = sum(num_credit(p[1], g[1], g[0]) for p, g in hits) / m
    penalty = 0.03 * max(0, n - m)
    reward = max(0.0, 0.10 * fmt + 0.25 * sem + 0.35 * ord_ + 0.30 * num - penalty)
    return dict(reward=reward, fmt=fmt, sem=sem, num=num, ord=ord_)


def score_binary(raw, gt):
    text = normalize(raw)
    parsed = {"yes": True, "true": True, "no": False, "false": False}.get(text)
    fmt = 0.0 if parsed is None else 1.0
    sem = 1.0 if parsed is gt else 0.0
    return dict(reward=0.20 * fmt + 0.80 * sem, fmt=fmt, sem=sem)


def score_box(raw, gt):
    stripped = raw.strip()
    m = BOX_EXACT.fullmatch(stripped)
    fmt = 1.0
    if m is None:
        m = BOX_ANY.search(stripped)
        fmt = 0.4
    if m is None:
        return dict(reward=0.0, fmt=0.0, valid=0.0, geo=0.0)
    x1, y1, x2, y2 = (float(g) for g in m.groups())
    ordered = x1 < x2 and y1 < y2
    overflow = sum(max(0.0, -v) + max(0.0, v - 1000.0) for v in (x1, y1, x2, y2)) / 4.0
    valid = 0.7 * (1.0 if ordered else 0.0) + 0.3 * max(0.0, 1.0 - overflow / 200.0)

    px1, px2 = sorted((x1, x2))
    py1, py2 = sorted((y1, y2))
    p = [min(max(v, 0.0), 1000.0) for v in (px1, py1, px2, py2)]
    g = [float(v) for v in gt]

    iw = max(0.0, min(p[2], g[2]) - max(p[0], g[0]))
    ih = max(0.0, min(p[3], g[3]) - max(p[1], g[1]))
    inter = iw * ih
    union = (p[2] - p[0]) * (p[3] - p[1]) + (g[2] - g[0]) * (g[3] - g[1]) - inter
    iou = inter / union if union > 0 else 0.0

    gw, gh = g[2] - g[0], g[3] - g[1]
    dist = math.hypot((p[0] + p[2] - g[0] - g[2]) / 2, (p[1] + p[3] - g[1] - g[3]) / 2)
    center = max(0.0, 1.0 - dist / max(80.0, 0.6 * math.hypot(gw, gh)))
    l1 = max(0.0, 1.0 - sum(abs(a - b) for a, b in zip(p, g)) / 4 / 180.0)
    pw, ph = p[2] - p[0], p[3] - p[1]
    if pw > 0 and ph > 0:
        size = max(0.0, 1.0 - (abs(math.log(pw / gw)) + abs(math.log(ph / gh))) / 1.6)
    else:
        size = 0.0
    base = 0.45 * iou + 0.20 * center + 0.20 * l1 + 0.15 * size
    geo = base * (0.3 + 0.7 * valid)
    return dict(reward=0.20 * fmt + 0.15 * valid + 0.65 * geo, fmt=fmt, valid=valid, geo=geo)


FAMILY = {
    "A1": "motion", "A2": "motion", "A3": "sequence", "D3": "sequence",
    "A4": "binary", "D2": "binary", "D4": "binary", "D1": "box",
}
SEQ_LEN = {"A3": (2, 3), "D3": (1, 2)}


def parse_reference(task, ref, meta):
    fam = FAMILY[task]
    if fam == "motion":
        acts = actions(normalize(ref))
        want_rot = task == "A2"
        if len(acts) == 1 and (acts[0][0] in ROTATIONS) == want_rot:
            return acts[0]
        return None
    if fam == "sequence":
        acts = actions(normalize(ref))
        lo, hi = SEQ_LEN[task]
        return acts if lo <= len(acts) <= hi else None
    if fam == "binary":
        return {"yes": True, "true": True, "no": False, "false": False}.get(normalize(ref))
    if meta and meta.get("gt_box") is not None:
        b = meta["gt_box"]
    else:
        m = BOX_EXACT.fullmatch(ref.strip())
        if m is None:
            return None
        b = [int(v) for v in m.groups()]
        if not all(0 <= v <= 1000 for v in b):
            return None
    if not (0 <= b[0] < b[2] <= 1000 and 0 <= b[1] < b[3] <= 1000):
        return None
    return b


def score(task, raw, ref, meta=None):
    if task not in FAMILY:
        return dict(error="unknown_task")
    gt = parse_reference(task, ref, meta)
    if gt is None:
        return dict(error="bad_reference")
    if len(raw) > MAX_CHARS:
        return dict(reward=0.0, fmt=0.0, overlength=True)
    fam = FAMILY[task]
    out = {
        "motion": score_motion,
        "sequence": score_sequence,
        "binary": score_binary,
        "box": score_box,
    }[fam](raw, gt)
    out["overlength"] = False
    return out


def fmt_value(v):
    return f"{v:.1f}" if v == int(v) else f"{v}"


def say(kind, value):
    words = {
        "F": "move forward", "B": "move backward", "SL": "move left",
        "SR": "move right", "TL": "turn left", "TR": "turn right",
    }
    unit = "degrees" if kind in ROTATIONS else "meters"
    return f"{words[kind]} {fmt_value(value)} {unit}"


def handwritten():
    seq_gt = "move forward 1.8 meters; turn left 50 degrees"
    return [
        ("worked motion", "A1", "move forward 4.0 meters", "move forward 2.0 meters", None),
        ("worked sequence swap", "A3", "turn left 50 degrees; move forward 1.8 meters", seq_gt, None),
        ("worked sequence extra", "A3",
         "move forward 1.8 meters; turn left 50 degrees; turn right 30 degrees", seq_gt, None),
        ("worked box", "D1", "[0, 0, 500, 500]", "", {"gt_box": [0, 0, 1000, 1000]}),
        ("worked binary", "A4", "false", "true", None),
        ("overlength 201", "A4", "y" * 201, "yes", None),
        ("exactly 200", "D2", "no" + " " * 198, "no", None),
        ("perfect A1", "A1", "Move forward 4.3 meters.", "move forward 4.3 meters", None),
        ("perfect A2", "A2", "turn right 40 degrees", "turn right 40 degrees", None),
        ("wrong kind A2", "A2", "turn left 40 degrees", "turn right 40 degrees", None),
        ("A1 in prose", "A1", "I think we should move  backward 12 meters now", "move backward 2.5 meters", None),
        ("A1 glued keyword", "A1", "remove forward 2 meters", "move forward 2.0 meters", None),
        ("A1 singular unit", "A1", "move left 1 meter", "move left 1.0 meters", None),
        ("A1 no space unit", "A1", "move right 3.2meters!", "move right 3.0 meters", None),
        ("A1 two candidates", "A1", "move forward 9 meters or move forward 2.4 meters",
         "move forward 2.0 meters", None),
        ("A2 tolerance edge", "A2", "turn left 95 degrees", "turn left 10 degrees", None),
        ("A2 mid band", "A2", "turn left 47.5 degrees", "turn left 10 degrees", None),
        ("A3 penalty floor", "A3", "; ".join(["turn left 10 degrees"] * 40)[:200], seq_gt, None),
        ("A3 empty", "A3", "", seq_gt, None),
        ("D3 single", "D3", "turn right 30 degrees", "turn right 30 degrees", None),
        ("D3 reversed pair", "D3", "turn left 20 degrees, move backward 1.1 meters",
         "move backward 1.0 meters; turn left 20 degrees", None),
        ("binary trailing punct", "D4", "Yes. .", "yes", None),
        ("binary sentence", "D2", "yes, it is", "yes", None),
        ("binary true synonym", "A4", "TRUE", "yes", None),
        ("box embedded", "D1", "The box is [100, 120, 400, 500].", "[100, 100, 400, 500]", None),
        ("box swapped", "D1", "[400, 500, 100, 120]", "[100, 100, 400, 500]", None),
        ("box overflow", "D1", "[-150, 0, 1300, 900]", "[100, 100, 400, 500]", None),
        ("box degenerate", "D1", "[300, 300, 300, 600]", "[100, 100, 400, 500]", None),
        ("box no space", "D1", "[10,20,30,40]", "[10, 20, 30, 40]", None),
        ("box missing", "D1", "left half of the image", "[10, 20, 30, 40]", None),
        ("box disjoint", "D1", "[900, 900, 1000, 1000]", "[0, 0, 100, 100]", None),
        ("error unknown", "Z9", "yes", "yes", None),
        ("error lowercase task", "a1", "yes", "move forward 1.0 meters", None),
        ("error A1 rotation ref", "A1", "x", "turn left 20 degrees", None),
        ("error A2 translation ref", "A2", "x", "move forward 1.0 meters", None),
        ("error A3 one step", "A3", "x", "move forward 1.0 meters", None),
        ("error D3 three steps", "D3", "x",
         "move forward 1.0 meters; turn left 10 degrees; move left 1.0 meters", None),
        ("error binary ref", "D4", "yes", "maybe", None),
        ("error box ref", "D1", "[0, 0, 1, 1]", "[500, 500, 100, 100]", None),
        ("error box out of range", "D1", "[0, 0, 1, 1]", "[0, 0, 1001, 10]", None),
    ]


def generated(rng):
    cases = []
    trans = ["F", "B", "SL", "SR"]
    for i in range(8):
        k = rng.choice(trans)
        gt = round(rng.uniform(0.1, 6.0), 1)
        pk = k if rng.random() < 0.7 else rng.choice(trans)
        pv = round(max(0.0, gt + rng.uniform(-6, 6)), 1)
        cases.append((f"gen A1 {i}", "A1", say(pk, pv), say(k, gt), None))
    for i in range(8):
        k = rng.choice(["TL", "TR"])
        gt = rng.randrange(10, 100, 10)
        pk = k if rng.random() < 0.7 else rng.choice(["TL", "TR"])
        pv = max(0, gt + rng.randint(-100, 100))
        cases.append((f"gen A2 {i}", "A2", say(pk, pv), say(k, gt), None))
    for task, (lo, hi) in SEQ_LEN.items():
        for i in range(8):
            kinds = trans + ["TL", "TR"]
            gt = [(k, round(rng.uniform(1, 60), 1) if k in ROTATIONS else round(rng.uniform(0.1, 5), 1))
                  for k in rng.sample(kinds, rng.randint(lo, hi))]
            pred = list(gt)
            if rng.random() < 0.5:
                rng.shuffle(pred)
            pred = [(k, round(v * rng.uniform(0.5, 1.5), 1)) for k, v in pred]
            pred += [(rng.choice(kinds), 10.0)] * rng.randint(0, 3)
            pred = pred[: rng.randint(0, len(pred))] if rng.random() < 0.3 else pred
            sep = rng.choice(["; ", ", then ", " and "])
            cases.append((f"gen {task} {i}", task, sep.join(say(*a) for a in pred),
                          "; ".join(say(*a) for a in gt), None))
    words = ["yes", "no", "true", "false", "Yes!", "nope", "no.", "  NO  ", "yes yes"]
    for task in ("A4", "D2", "D4"):
        for i in range(4):
            cases.append((f"gen {task} {i}", task, rng.choice(words), rng.choice(["yes", "no"]), None))
    for i in range(10):
        x1, y1 = rng.randint(0, 800), rng.randint(0, 800)
        g = [x1, y1, rng.randint(x1 + 10, 1000), rng.randint(y1 + 10, 1000)]
        p = [v + rng.randint(-250, 250) for v in g]
        if rng.random() < 0.2:
            p[0], p[2] = p[2], p[0]
        text = "[{}, {}, {}, {}]".format(*p)
        if rng.random() < 0.3:
            text = f"answer: {text}"
        meta = {"gt_box": g} if rng.random() < 0.5 else None
        ref = "" if meta else "[{}, {}, {}, {}]".format(*g)
        cases.append((f"gen D1 {i}", "D1", text, ref, meta))
    return cases


def main():
    rng = random.Random(20240611)
    out = []
    for name, task, response, reference, meta in handwritten() + generated(rng):
        case = {"name": name, "task": task, "response": response, "reference": reference}
        if meta is not None:
            case["meta"] = meta
        case["expected"] = score(task, response, reference, meta)
        out.append(case)
    json.dump(out, sys.stdout, indent=1, ensure_ascii=False)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
