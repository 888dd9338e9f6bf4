"""Procedural simulation datasets in the oracle's input/output format.

Each datapoint is one rendered scenario, a prompt listing an action sequence
and the target transcript. Everything is a pure function of the manifest
seed and the datapoint's coordinates, so any datapoint can be rebuilt and
compared against its stored hash.

Layout under ``out``::

    manifest.json    spec, seed, counts, file hashes
    seen.jsonl       one record per line: {id, image, prompt, target, meta, sha256}
    unseen.jsonl     held-out appearance and unseen rule variants
    images/<id>.png
"""
from __future__ import annotations

import hashlib
import json
import random
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

from .render import render_png
from .worlds import ACTION_VOCAB, DOMAINS, SIZE_RANGES, describe, generate_map, run_sequence, simulation_prompt, step, transcript
from .worlds.generate import OVERCOOKED_SEEN_THEMES, SEEN_THEMES, UNSEEN_THEME, check_size
from .worlds.rules import INVALID, RESULTS, SUCCESS
from .worlds.scenario import UNSEEN_VARIANTS, VARIANTS, normalize_domain

# datapoints per seen appearance
TABLE_COUNTS = {
    "frozenlake": 20000,
    "maze": 20000,
    "sokoban": 20000,
    "package": 5000,
    "printer": 5000,
    "overcooked": 19739,
}

# domains with a game-ending failure, the only ones that can produce Invalid
TERMINAL_FAILURE = frozenset({"frozenlake"})


@dataclass(frozen=True)
class SpecEntry:
    domain: str
    theme: str
    size: int
    variant: str = "base"
    n: int = 0

    def check(self) -> "SpecEntry":
        dom = normalize_domain(self.domain)
        check_size(dom, self.size)
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown rule variant {self.variant!r}")
        if self.variant != "base" and dom != "frozenlake":
            raise ValueError("rule variants only exist for frozenlake")
        if self.n < 0:
            raise ValueError("datapoint count must be non-negative")
        return SpecEntry(dom, self.theme, self.size, self.variant, self.n)

    @property
    def split(self) -> str:
        return "unseen" if self.theme == UNSEEN_THEME or self.variant in UNSEEN_VARIANTS else "seen"


@dataclass(frozen=True)
class Mix:
    """How action sequences are drawn."""

    min_len: int = 1
    max_len: int = 10
    noise: float = 0.3  # chance that a step picks a failing action
    obstacle_prob: float = 0.25


def seen_themes(domain: str) -> tuple[str, ...]:
    return OVERCOOKED_SEEN_THEMES if domain == "overcooked" else SEEN_THEMES


def full_scale_spec(include_unseen: bool = False) -> list[SpecEntry]:
    """The full batch: per-appearance counts spread evenly over each size range."""
    out = []
    for dom in DOMAINS:
        lo, hi = SIZE_RANGES[dom]
        sizes = list(range(lo, hi + 1))
        themes = seen_themes(dom) + ((UNSEEN_THEME,) if include_unseen else ())
        for theme in themes:
            total = TABLE_COUNTS[dom]
            for i, size in enumerate(sizes):
                n = total // len(sizes) + (1 if i < total % len(sizes) else 0)
                out.append(SpecEntry(dom, theme, size, "base", n))
    return out


def spec_total(spec) -> int:
    return sum(e.n for e in spec)


def _int_seed(*parts) -> int:
    return int(hashlib.sha256("/".join(map(str, parts)).encode()).hexdigest()[:12], 16)


def sample_actions(sc, rng: random.Random, mix: Mix) -> list[str]:
    """Random walk mixed with noise actions, so failures and post-failure steps occur."""
    vocab = ACTION_VOCAB[sc.domain]
    length = rng.randint(mix.min_len, mix.max_len)
    cur, out = sc, []
    for _ in range(length):
        results = {a: step(cur, a).result for a in vocab}
        ok = [a for a in vocab if results[a] == SUCCESS]
        bad = [a for a in vocab if results[a] != SUCCESS]
        # noise steps deliberately pick an action that does not succeed
        pool = bad if (bad and rng.random() < mix.noise) or not ok else ok
        a = rng.choice(pool)
        out.append(a)
        cur = step(cur, a).scenario
    return out


def _datapoint_id(e: SpecEntry, k: int) -> str:
    return f"{e.domain}-{e.theme}-{e.size}-{e.variant}-{k:06d}"


def rebuild_scenario(meta: dict, mix: Mix = Mix()):
    """The scenario behind a stored datapoint, from its metadata."""
    return generate_map(meta["domain"], meta["size"], mix.obstacle_prob, meta["seed"], variant=meta["variant"],
                        theme=meta["theme"])


def build_datapoint(e: SpecEntry, k: int, seed: int, mix: Mix = Mix()) -> tuple[dict, bytes]:
    """The record and PNG bytes of datapoint ``k`` of entry ``e``."""
    dp_seed = _int_seed(seed, e.domain, e.theme, e.size, e.variant, k)
    sc = generate_map(e.domain, e.size, mix.obstacle_prob, dp_seed, variant=e.variant, theme=e.theme)
    rng = random.Random(dp_seed)
    actions = sample_actions(sc, rng, mix)
    trace = run_sequence(sc, actions)
    png = render_png(sc, e.theme)
    ident = _datapoint_id(e, k)
    record = {
        "id": ident,
        "image": f"images/{ident}.png",
        "prompt": simulation_prompt(e.domain, actions, e.variant),
        "target": transcript(describe(sc), trace),
        "meta": {
            "domain": e.domain,
            "size": e.size,
            "theme": e.theme,
            "variant": e.variant,
            "seed": dp_seed,
            "index": k,
            "split": e.split,
            "actions": actions,
            "results": [s.result for s in trace.steps],
        },
    }
    record["sha256"] = content_hash(record, png)
    return record, png


def content_hash(record: dict, png: bytes) -> str:
    h = hashlib.sha256()
    h.update(record["prompt"].encode())
    h.update(b"\0")
    h.update(record["target"].encode())
    h.update(b"\0")
    h.update(png)
    return h.hexdigest()


def _build_entry(args) -> list[tuple[dict, bytes]]:
    e, seed, mix = args
    return [build_datapoint(e, k, seed, mix) for k in range(e.n)]


def generate_dataset(spec, seed: int, out, *, mix: Mix = Mix(), workers: int = 1) -> dict:
    """Write the dataset for ``spec`` under ``out`` and return its manifest."""
    entries = [SpecEntry(**e).check() if isinstance(e, dict) else e.check() for e in spec]
    root = Path(out)
    (root / "images").mkdir(parents=True, exist_ok=True)
    jobs = [(e, seed, mix) for e in entries]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            shards = list(pool.map(_build_entry, jobs))
    else:
        shards = [_build_entry(j) for j in jobs]
    lines = {"seen": [], "unseen": []}
    for shard in shards:
        for record, png in shard:
            (root / record["image"]).write_bytes(png)
            lines[record["meta"]["split"]].append(json.dumps(record, sort_keys=True))
    files = {}
    for split, rows in lines.items():
        text = "".join(r + "\n" for r in rows)
        (root / f"{split}.jsonl").write_text(text, encoding="utf-8")
        files[f"{split}.jsonl"] = hashlib.sha256(text.encode()).hexdigest()
    manifest = {
        "seed": seed,
        "mix": asdict(mix),
        "spec": [asdict(e) for e in entries],
        "counts": {split: len(rows) for split, rows in lines.items()},
        "files": files,
    }
    (root / "manifest.json").write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    return manifest


def load_records(out, split: str | None = None) -> list[dict]:
    root = Path(out)
    splits = [split] if split else ["seen", "unseen"]
    records = []
    for s in splits:
        path = root / f"{s}.jsonl"
        if path.exists():
            records += [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line]
    return records


def verify_dataset(out, *, workers: int = 1) -> list[str]:
    """Rebuild every datapoint from the manifest and report any difference."""
    root = Path(out)
    manifest = json.loads((root / "manifest.json").read_text(encoding="utf-8"))
    mix = Mix(**manifest["mix"])
    problems = []
    stored = {r["id"]: r for r in load_records(root)}
    entries = [SpecEntry(**e) for e in manifest["spec"]]
    jobs = [(e, manifest["seed"], mix) for e in entries]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            shards = list(pool.map(_build_entry, jobs))
    else:
        shards = [_build_entry(j) for j in jobs]
    rebuilt = 0
    for shard in shards:
        for record, png in shard:
            rebuilt += 1
            old = stored.get(record["id"])
            if old is None:
                problems.append(f"{record['id']}: missing from the stored dataset")
                continue
            if old != record:
                problems.append(f"{record['id']}: record differs")
            image = root / old["image"]
            if not image.exists() or image.read_bytes() != png:
                problems.append(f"{record['id']}: image differs")
    if rebuilt != len(stored):
        problems.append(f"stored dataset has {len(stored)} records, spec yields {rebuilt}")
    return problems


def label_balance(records, threshold: float = 0.05) -> dict:
    """Per-domain result-label frequencies over every step, with a pass flag.

    Invalid is only required where a failure ends the game; elsewhere it
    cannot occur.
    """
    counts: dict[str, Counter] = {}
    for r in records:
        counts.setdefault(r["meta"]["domain"], Counter()).update(r["meta"]["results"])
    report = {}
    for dom, c in sorted(counts.items()):
        total = sum(c.values())
        freqs = {label: c[label] / total for label in RESULTS}
        required = RESULTS if dom in TERMINAL_FAILURE else tuple(l for l in RESULTS if l != INVALID)
        report[dom] = {
            "steps": total,
            "frequencies": freqs,
            "ok": all(freqs[l] >= threshold for l in required),
        }
    return report


def split_audit(out) -> list[str]:
    """Unseen appearances and unseen rules must stay out of the seen split."""
    problems = []
    seen = load_records(out, "seen")
    unseen = load_records(out, "unseen")
    for r in seen:
        m = r["meta"]
        if m["theme"] == UNSEEN_THEME or m["variant"] in UNSEEN_VARIANTS or m["split"] != "seen":
            problems.append(f"{r['id']} is held-out material in the seen split")
    for r in unseen:
        if r["meta"]["split"] != "unseen":
            problems.append(f"{r['id']} is marked {r['meta']['split']} but stored in the unseen split")
    shared = {r["id"] for r in seen} & {r["id"] for r in unseen}
    problems += [f"{i} appears in both splits" for i in sorted(shared)]
    images = Counter(r["image"] for r in seen + unseen)
    problems += [f"image {img} is shared by {n} records" for img, n in sorted(images.items()) if n > 1]
    return problems


def desk_spec(n: int = 1000) -> list[SpecEntry]:
    """A small spec covering every domain, a held-out appearance and some rule variants."""
    entries = []
    per = n // 8
    for dom in DOMAINS:
        lo, _ = SIZE_RANGES[dom]
        entries.append(SpecEntry(dom, "theme-1", lo + 1, "base", per))
    entries.append(SpecEntry("frozenlake", "theme-2", 4, "r8", per))
    rest = n - spec_total(entries)
    entries.append(SpecEntry("frozenlake", UNSEEN_THEME, 4, "u5", rest))
    return entries
