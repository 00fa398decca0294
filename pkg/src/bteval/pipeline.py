"""ZHx -> EN -> ZHy round-trip execution against configured backends.

Backends are either HTTP chat-completion endpoints or deterministic
mocks (identity, bilingual token mapper, and a seeded noise wrapper over
the mapper). Every (sample, backend, repetition) triple yields exactly
one TranslationRecord whether it succeeded or not, anomaly flags
included, so a run is replayable byte-for-byte from its manifest and a
mock configuration.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import os
import random
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np
import requests

from .corpus import Corpus, TextSample
from .metrics import (
    METRIC_NAMES,
    BleuConfig,
    ScoringConfig,
    DEFAULT_SCORING,
    bleu,
    fit_idf,
    score_pair,
)
from .segmentation import (
    Lexicon,
    default_lexicon,
    default_variant_table,
    detect_traditional,
    segment_words,
)
from .stats import ExperimentDesign, ScoreMatrix

ZH_TO_EN = "zh_to_en"
EN_TO_ZH = "en_to_zh"

DEFAULT_VERBATIM_THRESHOLD = 0.70

# Instruction phrasings rotated across repetitions; {text} is the payload slot.
PROMPT_VARIANTS = {
    ZH_TO_EN: (
        "Translate the following Chinese text into English. Reply with the translation only.\n\n{text}",
        "Render this Chinese passage in natural English, returning nothing but the English text.\n\n{text}",
        "Please provide an English translation of the Chinese text below. Output only the translation.\n\n{text}",
    ),
    EN_TO_ZH: (
        "Translate the following English text into Simplified Chinese. Reply with the translation only.\n\n{text}",
        "Render this English passage in natural Simplified Chinese, returning nothing but the Chinese text.\n\n{text}",
        "Please provide a Simplified Chinese translation of the English text below. Output only the translation.\n\n{text}",
    ),
}


class BackendError(RuntimeError):
    """A translation request that failed after all retries."""


class ConfigError(ValueError):
    """Invalid backend or run configuration."""


@dataclass
class BackendConfig:
    id: str
    kind: str  # "http_llm" or "mock"
    model_name: str = ""
    endpoint: str = ""
    prompt_template_forward: str | None = None
    prompt_template_backward: str | None = None
    temperature: float = 0.0
    timeout: float = 30.0
    max_retries: int = 2
    api_key_env: str | None = None
    wire_format: str = "chat"  # "chat" or "raw"
    rate_limit_rps: float = 1.0
    max_workers: int = 4
    # noise-mock parameters
    drop_prob: float = 0.0
    swap_prob: float = 0.0

    def __post_init__(self) -> None:
        if not self.id:
            raise ConfigError("backend id must be non-empty")
        if self.kind not in ("http_llm", "mock"):
            raise ConfigError(f"backend {self.id}: unknown kind {self.kind!r}")
        if self.kind == "mock" and self.model_name not in ("identity", "lexicon", "noise"):
            raise ConfigError(
                f"backend {self.id}: mock model_name must be identity, lexicon, or noise"
            )
        if self.kind == "http_llm" and not self.endpoint:
            raise ConfigError(f"backend {self.id}: http_llm requires an endpoint")
        if self.wire_format not in ("chat", "raw"):
            raise ConfigError(f"backend {self.id}: unknown wire format {self.wire_format!r}")
        for name in ("prompt_template_forward", "prompt_template_backward"):
            template = getattr(self, name)
            if template is not None and template.count("{text}") != 1:
                raise ConfigError(
                    f"backend {self.id}: {name} must contain exactly one {{text}} placeholder"
                )

    @classmethod
    def from_dict(cls, data: dict) -> "BackendConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown backend fields: {sorted(unknown)}")
        return cls(**data)


@dataclass
class TranslationRecord:
    sample_id: str
    backend_id: str
    repetition: int  # 1-based
    zhx: str
    en: str
    zhy: str
    seed: int
    prompt_variant: int
    verbatim_flag: bool = False
    traditional_flag: bool = False
    error: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TranslationRecord":
        return cls(**data)


@dataclass
class RunManifest:
    corpus_name: str
    corpus_sha256: str
    backend_ids: list[str]
    design: dict  # {"n", "k", "r"}
    scoring: dict
    master_seed: int
    timestamp: str
    prompt_variants: dict = field(default_factory=lambda: {
        direction: list(templates) for direction, templates in PROMPT_VARIANTS.items()
    })
    verbatim_threshold: float = DEFAULT_VERBATIM_THRESHOLD
    traditional_threshold: float = 0.05

    def to_dict(self) -> dict:
        return asdict(self)


def derive_seed(master_seed: int, sample_id: str, backend_id: str, repetition: int) -> int:
    """Stable 63-bit seed; Python's salted hash() is useless for replay."""
    key = f"{master_seed}:{sample_id}:{backend_id}:{repetition}".encode("utf-8")
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "big") >> 1


class TokenBucket:
    """Blocking token bucket; one bucket per HTTP backend."""

    def __init__(self, rate_per_sec: float, capacity: float = 1.0,
                 clock=time.monotonic, sleep=time.sleep) -> None:
        self.rate = rate_per_sec
        self.capacity = capacity
        self._clock = clock
        self._sleep = sleep
        self._tokens = capacity
        self._last = clock()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self._clock()
                self._tokens = min(self.capacity, self._tokens + (now - self._last) * self.rate)
                self._last = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait = (1.0 - self._tokens) / self.rate
            self._sleep(wait)


def _template_for(config: BackendConfig, direction: str, variant: int) -> str:
    override = (config.prompt_template_forward if direction == ZH_TO_EN
                else config.prompt_template_backward)
    if override is not None:
        return override
    variants = PROMPT_VARIANTS[direction]
    return variants[variant % len(variants)]


class IdentityMock:
    """Round-trip no-op: the back-translation equals the original."""

    def __init__(self, config: BackendConfig) -> None:
        self.config = config

    def translate(self, text: str, direction: str, seed: int, variant: int) -> str:
        return text


# Invertible ZH <-> EN token table for the mapper mock; unknown tokens pass
# through unchanged, which keeps the mapping invertible for arbitrary input.
BILINGUAL_TABLE = {
    "人工智能": "artificial-intelligence",
    "化学": "chemistry",
    "工程": "engineering",
    "计算": "computation",
    "研究": "research",
    "分析": "analysis",
    "方法": "method",
    "结果": "result",
    "实验": "experiment",
    "反应": "reaction",
    "物质": "substance",
    "元素": "element",
    "组成": "composition",
    "性质": "property",
    "结构": "structure",
    "效率": "efficiency",
    "质量": "quality",
    "提高": "improve",
    "应用": "application",
    "技术": "technology",
    "系统": "system",
    "我": "i",
    "你": "you",
    "的": "de",
    "了": "le",
    "是": "is",
    "在": "at",
    "和": "and",
    "与": "with",
    "眼泪": "tears",
    "月光": "moonlight",
    "时间": "time",
}


class LexiconMapperMock:
    """Bilingual token mapper: segment, map each token, join; exactly invertible."""

    def __init__(self, config: BackendConfig, lexicon: Lexicon | None = None,
                 table: dict[str, str] | None = None) -> None:
        self.config = config
        self.lexicon = lexicon if lexicon is not None else default_lexicon()
        self.forward_table = dict(table) if table is not None else dict(BILINGUAL_TABLE)
        self.backward_table = {v: k for k, v in self.forward_table.items()}
        if len(self.backward_table) != len(self.forward_table):
            raise ConfigError("bilingual table must be invertible")

    def translate(self, text: str, direction: str, seed: int, variant: int) -> str:
        if direction == ZH_TO_EN:
            tokens = segment_words(text, self.lexicon).tokens
            return " ".join(self.forward_table.get(t, t) for t in tokens)
        tokens = text.split(" ")
        return "".join(self.backward_table.get(t, t) for t in tokens)


class NoiseMock:
    """Seeded token drop/swap noise over the mapper mock."""

    def __init__(self, config: BackendConfig, lexicon: Lexicon | None = None) -> None:
        self.config = config
        self.base = LexiconMapperMock(config, lexicon)

    def translate(self, text: str, direction: str, seed: int, variant: int) -> str:
        clean = self.base.translate(text, direction, seed, variant)
        # int-only seed material: hash() of strings is salted per process
        rng = random.Random(seed * 2 + (1 if direction == EN_TO_ZH else 0))
        if direction == ZH_TO_EN:
            tokens = clean.split(" ")
        else:
            tokens = list(segment_words(clean, self.base.lexicon).tokens)
        kept = [t for t in tokens if rng.random() >= self.config.drop_prob]
        if not kept:
            kept = tokens[:1]
        i = 0
        while i < len(kept) - 1:
            if rng.random() < self.config.swap_prob:
                kept[i], kept[i + 1] = kept[i + 1], kept[i]
                i += 2
            else:
                i += 1
        return " ".join(kept) if direction == ZH_TO_EN else "".join(kept)


class HttpBackend:
    """Chat-completion (or raw text) endpoint with retries and rate limiting."""

    def __init__(self, config: BackendConfig, post_fn=None, sleep=time.sleep,
                 api_key: str | None = None) -> None:
        self.config = config
        self._post = post_fn if post_fn is not None else requests.post
        self._sleep = sleep
        self._bucket = TokenBucket(config.rate_limit_rps, sleep=sleep)
        self._api_key = api_key

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        key = self._api_key
        if key is None and self.config.api_key_env:
            key = os.environ.get(self.config.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def translate(self, text: str, direction: str, seed: int, variant: int) -> str:
        prompt = _template_for(self.config, direction, variant).replace("{text}", text)
        # retry jitter derives from the request seed so the schedule replays
        jitter_rng = random.Random(seed * 4 + 3)
        last_error = "no attempt made"
        for attempt in range(self.config.max_retries + 1):
            self._bucket.acquire()
            try:
                response = self._request(prompt, seed)
            except (requests.RequestException, OSError) as exc:
                last_error = f"transport error: {exc}"
            else:
                status = getattr(response, "status_code", 200)
                if 200 <= status < 300:
                    completion = self._extract(response)
                    if completion:
                        return completion
                    last_error = "empty completion"
                else:
                    last_error = f"HTTP {status}"
            if attempt < self.config.max_retries:
                self._sleep((2 ** attempt) * 0.5 + jitter_rng.random() * 0.1)
        raise BackendError(f"{self.config.id}: {last_error}")

    def _request(self, prompt: str, seed: int):
        if self.config.wire_format == "raw":
            return self._post(
                self.config.endpoint,
                data=prompt.encode("utf-8"),
                headers={"Content-Type": "text/plain; charset=utf-8"},
                timeout=self.config.timeout,
            )
        payload = {
            "model": self.config.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
            "seed": seed,
        }
        return self._post(
            self.config.endpoint,
            json=payload,
            headers=self._headers(),
            timeout=self.config.timeout,
        )

    def _extract(self, response) -> str:
        if self.config.wire_format == "raw":
            return response.text.strip()
        try:
            data = response.json()
            return data["choices"][0]["message"]["content"].strip()
        except (KeyError, IndexError, TypeError, ValueError):
            return ""


def make_backend(config: BackendConfig, lexicon: Lexicon | None = None, **http_kwargs):
    if config.kind == "mock":
        if config.model_name == "identity":
            return IdentityMock(config)
        if config.model_name == "lexicon":
            return LexiconMapperMock(config, lexicon)
        return NoiseMock(config, lexicon)
    return HttpBackend(config, **http_kwargs)


def translate(backend, text: str, direction: str, seed: int = 0, variant: int = 0,
              lexicon: Lexicon | None = None) -> str:
    """One translation leg; accepts a BackendConfig or an instantiated backend."""
    if isinstance(backend, BackendConfig):
        backend = make_backend(backend, lexicon)
    return backend.translate(text, direction, seed, variant)


def detect_verbatim(zhx: str, zhy: str, lexicon: Lexicon | None = None,
                    threshold: float = DEFAULT_VERBATIM_THRESHOLD) -> tuple[float, bool]:
    """Word-level 1-2 gram BLEU of the back-translation against its own source."""
    if not zhx.strip():
        raise ValueError("zhx must be non-empty")
    if lexicon is None:
        lexicon = default_lexicon()
    reference = segment_words(zhx, lexicon)
    candidate = segment_words(zhy, lexicon)
    similarity = bleu(candidate, reference, BleuConfig())
    return similarity, similarity >= threshold


def _roundtrip(backend, config: BackendConfig, sample: TextSample, repetition: int,
               master_seed: int, lexicon: Lexicon, variant_table: dict[str, str],
               verbatim_threshold: float, traditional_threshold: float) -> TranslationRecord:
    seed = derive_seed(master_seed, sample.id, config.id, repetition)
    variant = (repetition - 1) % len(PROMPT_VARIANTS[ZH_TO_EN])
    record = TranslationRecord(
        sample_id=sample.id,
        backend_id=config.id,
        repetition=repetition,
        zhx=sample.text,
        en="",
        zhy="",
        seed=seed,
        prompt_variant=variant,
    )
    try:
        record.en = backend.translate(sample.text, ZH_TO_EN, seed, variant)
        record.zhy = backend.translate(record.en, EN_TO_ZH, seed, variant)
        if not record.zhy.strip():
            raise BackendError(f"{config.id}: empty back-translation")
    except BackendError as exc:
        record.zhy = ""
        record.error = str(exc)
        return record
    similarity, flagged = detect_verbatim(sample.text, record.zhy, lexicon, verbatim_threshold)
    record.verbatim_flag = flagged
    _, record.traditional_flag = detect_traditional(
        record.zhy, variant_table, traditional_threshold
    )
    return record


def backtranslate(
    backend_config: BackendConfig,
    sample: TextSample,
    r: int,
    master_seed: int,
    lexicon: Lexicon | None = None,
    variant_table: dict[str, str] | None = None,
    verbatim_threshold: float = DEFAULT_VERBATIM_THRESHOLD,
    traditional_threshold: float = 0.05,
    backend=None,
) -> list[TranslationRecord]:
    """r independent round-trips with distinct derived seeds and cycled prompts."""
    if r < 1:
        raise ConfigError("repetitions must be >= 1")
    if lexicon is None:
        lexicon = default_lexicon()
    if variant_table is None:
        variant_table = default_variant_table()
    if backend is None:
        backend = make_backend(backend_config, lexicon)
    return [
        _roundtrip(backend, backend_config, sample, rep, master_seed,
                   lexicon, variant_table, verbatim_threshold, traditional_threshold)
        for rep in range(1, r + 1)
    ]


def run_experiment(
    corpus: Corpus,
    backends: list[BackendConfig],
    r: int,
    scoring: ScoringConfig = DEFAULT_SCORING,
    master_seed: int = 0,
    lexicon: Lexicon | None = None,
    variant_table: dict[str, str] | None = None,
    verbatim_threshold: float = DEFAULT_VERBATIM_THRESHOLD,
    traditional_threshold: float = 0.05,
    backend_instances: dict | None = None,
) -> tuple[dict[str, ScoreMatrix], list[TranslationRecord], RunManifest]:
    """Full grid execution: per-metric score matrices, the sorted record log, and a manifest.

    Backend failures become error records and missing score cells; only
    corpus or configuration problems abort the run.
    """
    if len({b.id for b in backends}) != len(backends):
        raise ConfigError("backend ids must be unique within a run")
    if lexicon is None:
        lexicon = default_lexicon()
    if variant_table is None:
        variant_table = default_variant_table()

    records: list[TranslationRecord] = []
    for config in backends:
        if backend_instances and config.id in backend_instances:
            backend = backend_instances[config.id]
        else:
            backend = make_backend(config, lexicon)
        jobs = [(sample, rep) for sample in corpus for rep in range(1, r + 1)]
        with ThreadPoolExecutor(max_workers=max(1, config.max_workers)) as pool:
            futures = [
                pool.submit(_roundtrip, backend, config, sample, rep, master_seed,
                            lexicon, variant_table, verbatim_threshold, traditional_threshold)
                for sample, rep in jobs
            ]
            records.extend(f.result() for f in futures)
    records.sort(key=lambda rec: (rec.sample_id, rec.backend_id, rec.repetition))

    # IDF refits on this batch: every original plus every non-error back-translation.
    documents = [segment_words(s.text, lexicon) for s in corpus]
    documents.extend(
        segment_words(rec.zhy, lexicon) for rec in records if rec.error is None
    )
    idf = fit_idf(documents) if len(documents) >= 2 else None

    design = ExperimentDesign(n=len(corpus), k=len(backends), r=r)
    block_index = {s.id: i for i, s in enumerate(corpus)}
    treatment_index = {b.id: j for j, b in enumerate(backends)}
    grids = {name: np.full((design.n, design.k, design.r), np.nan) for name in METRIC_NAMES}
    for rec in records:
        if rec.error is not None:
            continue
        vector = score_pair(rec.zhx, rec.zhy, lexicon, scoring, idf)
        b, t, rep = block_index[rec.sample_id], treatment_index[rec.backend_id], rec.repetition - 1
        for name in METRIC_NAMES:
            grids[name][b, t, rep] = vector[name]

    matrices = {
        name: ScoreMatrix(
            design=design,
            metric=name,
            values=grid,
            block_ids=[s.id for s in corpus],
            treatment_ids=[b.id for b in backends],
        )
        for name, grid in grids.items()
    }
    manifest = RunManifest(
        corpus_name=corpus.name,
        corpus_sha256=corpus.sha256 or "",
        backend_ids=[b.id for b in backends],
        design={"n": design.n, "k": design.k, "r": design.r},
        scoring=scoring.as_dict(),
        master_seed=master_seed,
        timestamp=_dt.datetime.now(_dt.timezone.utc).isoformat(),
        verbatim_threshold=verbatim_threshold,
        traditional_threshold=traditional_threshold,
    )
    return matrices, records, manifest


def write_records(records: list[TranslationRecord], path: str | Path) -> None:
    lines = [json.dumps(rec.to_dict(), ensure_ascii=False) for rec in records]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_records(path: str | Path) -> list[TranslationRecord]:
    records = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            records.append(TranslationRecord.from_dict(json.loads(line)))
    return records
