"""Challenge-response datasets and the standard quality metrics.

A record is one read: which chip, which challenge, the 11-bit response
and the conditions it was taken under.  Noise is reproducible per record:
the generator seed is derived from (dataset noise seed, chip id,
challenge word), so re-generating any single record gives the same bits
without replaying the whole dataset.

Metrics follow the usual fractional-Hamming-distance conventions:

    uniqueness   mean pairwise HD between chips on shared challenges
                 (ideal 0.5 on unbiased bit positions)
    uniformity   fraction of ones a single chip emits (ideal 0.5)
    reliability  1 - mean HD between a reference read and re-reads under
                 stress conditions (ideal 1.0)
    bit_aliasing per-position mean across chips (ideal 0.5 per bit)
"""

from __future__ import annotations

import csv
import json
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .adc import WORD_BITS, AdcConfig, ResponseWord, convert
from .analog import Conditions, TransferModel
from .cellarray import CHALLENGE_BITS, Challenge, evaluate
from .quantizer import QuantizerSpec
from .variation import ChipInstance


@dataclass(frozen=True)
class CrpRecord:
    chip_id: str
    challenge: int
    response: ResponseWord
    conditions: Conditions

    def __post_init__(self) -> None:
        if not (0 <= self.challenge < 1 << CHALLENGE_BITS):
            raise ValueError(f"challenge must be in [0, 255], got {self.challenge}")


@dataclass
class CrpDataset:
    records: list[CrpRecord]
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def chip_ids(self) -> list[str]:
        """Distinct chip ids in first-appearance order."""
        seen: dict[str, None] = {}
        for r in self.records:
            seen.setdefault(r.chip_id)
        return list(seen)

    def for_chip(self, chip_id: str) -> list[CrpRecord]:
        out = [r for r in self.records if r.chip_id == chip_id]
        if not out:
            raise ValueError(f"no records for chip {chip_id!r}")
        return out


def record_seed(base_seed: int, chip_id: str, challenge: int) -> int:
    """Derived noise seed for one (chip, challenge) read."""
    ss = np.random.SeedSequence([base_seed, zlib.crc32(chip_id.encode()), challenge])
    return int(ss.generate_state(1, np.uint64)[0])


def bits_matrix(records: list[CrpRecord]) -> np.ndarray:
    """Encoded responses as an (n, 11) int8 matrix."""
    out = np.empty((len(records), WORD_BITS), dtype=np.int8)
    for i, r in enumerate(records):
        enc = r.response.encoded
        for j in range(WORD_BITS):
            out[i, j] = enc[j] == "1"
    return out


def generate(
    chips: list[ChipInstance],
    model: TransferModel,
    spec: QuantizerSpec,
    adc_config: AdcConfig,
    challenges: list[int],
    conditions: Conditions,
) -> CrpDataset:
    """Read every chip at every challenge under one set of conditions.

    Records are emitted chip-major in the order given, challenge order
    preserved within a chip.  The same arguments always produce the same
    dataset, noise included.
    """
    if not chips:
        raise ValueError("need at least one chip")
    if not challenges:
        raise ValueError("need at least one challenge")
    records: list[CrpRecord] = []
    for chip in chips:
        for word in challenges:
            seed = record_seed(conditions.noise_seed, chip.chip_id, word)
            cond = Conditions(
                temperature=conditions.temperature,
                noise_sigma=conditions.noise_sigma,
                noise_seed=seed,
            )
            rng = np.random.default_rng(seed) if conditions.noise_sigma > 0.0 else None
            v = evaluate(model, chip, Challenge(word), cond, rng=rng)
            records.append(
                CrpRecord(
                    chip_id=chip.chip_id,
                    challenge=word,
                    response=convert(adc_config, spec, v),
                    conditions=cond,
                )
            )
    meta = {
        "temperature": conditions.temperature,
        "noise_sigma": conditions.noise_sigma,
        "noise_seed": conditions.noise_seed,
        "n_chips": len(chips),
        "n_challenges": len(challenges),
    }
    return CrpDataset(records=records, metadata=meta)


def uniqueness(dataset: CrpDataset, bit_positions: list[int] | None = None) -> float:
    """Mean pairwise fractional HD between chips over shared challenges.

    bit_positions restricts the comparison to a subset of the 11 response
    bits (for example code bits only); default is all of them.
    """
    ids = dataset.chip_ids
    if len(ids) < 2:
        raise ValueError(f"uniqueness needs >= 2 chips, got {len(ids)}")
    per_chip: dict[str, dict[int, np.ndarray]] = {c: {} for c in ids}
    rows = bits_matrix(dataset.records)
    for r, row in zip(dataset.records, rows):
        per_chip[r.chip_id][r.challenge] = row
    common = set(per_chip[ids[0]])
    for c in ids[1:]:
        common &= set(per_chip[c])
    if not common:
        raise ValueError("chips share no common challenges")
    order = sorted(common)
    stack = np.stack([[per_chip[c][w] for w in order] for c in ids])  # (K, C, 11)
    if bit_positions is not None:
        stack = stack[:, :, bit_positions]
    diff = (stack[:, None, :, :] != stack[None, :, :, :]).mean(axis=(2, 3))
    iu = np.triu_indices(len(ids), k=1)
    return float(diff[iu].mean())


def uniformity(dataset: CrpDataset, chip_id: str) -> float:
    """Fraction of ones across one chip's encoded responses."""
    return float(bits_matrix(dataset.for_chip(chip_id)).mean())


def bit_aliasing(dataset: CrpDataset) -> np.ndarray:
    """Per-position mean bit value pooled over all records (length 11).

    With a single challenge in the dataset this is the classic
    across-chip aliasing figure; with many challenges it pools over
    challenges as well.
    """
    if len(dataset.chip_ids) < 2:
        raise ValueError("bit_aliasing needs >= 2 chips")
    return bits_matrix(dataset.records).mean(axis=0)


def reliability(
    chip: ChipInstance,
    model: TransferModel,
    spec: QuantizerSpec,
    adc_config: AdcConfig,
    test_conditions: list[Conditions],
    reference: Conditions | None = None,
) -> float:
    """1 - mean encoded HD between reference reads and stressed re-reads.

    The reference defaults to a noise-free read at 25 degC.  All 256
    challenges are compared under every test condition.
    """
    if not test_conditions:
        raise ValueError("need at least one test condition")
    if reference is None:
        reference = Conditions(temperature=25.0, noise_sigma=0.0)
    words = list(range(1 << CHALLENGE_BITS))
    ref = generate([chip], model, spec, adc_config, words, reference)
    ref_bits = bits_matrix(ref.records)
    total = 0.0
    for cond in test_conditions:
        got = generate([chip], model, spec, adc_config, words, cond)
        total += float((bits_matrix(got.records) != ref_bits).mean())
    return 1.0 - total / len(test_conditions)


@dataclass(frozen=True)
class MetricsReport:
    """Bundle of dataset metrics; reliability is per chip and optional."""

    uniqueness: float | None
    uniformity: dict[str, float]
    bit_aliasing: tuple[float, ...] | None
    reliability: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        vals = list(self.uniformity.values()) + list(self.reliability.values())
        if self.uniqueness is not None:
            vals.append(self.uniqueness)
        if self.bit_aliasing is not None:
            vals.extend(self.bit_aliasing)
        for v in vals:
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"metric value {v} outside [0, 1]")

    def to_dict(self) -> dict:
        return {
            "uniqueness": self.uniqueness,
            "uniformity": dict(self.uniformity),
            "bit_aliasing": list(self.bit_aliasing) if self.bit_aliasing is not None else None,
            "reliability": dict(self.reliability),
        }


# challenge is serialized as 2-digit hex; noise_sigma rides along so a
# loaded record reconstructs its Conditions value-exactly.
CSV_FIELDS = (
    "chip_id",
    "challenge",
    "region",
    "code",
    "bits",
    "encoded",
    "temperature",
    "noise_sigma",
    "noise_seed",
)


def _record_row(r: CrpRecord) -> dict:
    return {
        "chip_id": r.chip_id,
        "challenge": format(r.challenge, "02x"),
        "region": r.response.region,
        "code": r.response.code,
        "bits": r.response.bits,
        "encoded": r.response.encoded,
        "temperature": r.conditions.temperature,
        "noise_sigma": r.conditions.noise_sigma,
        "noise_seed": r.conditions.noise_seed,
    }


def _row_record(row: dict) -> CrpRecord:
    return CrpRecord(
        chip_id=row["chip_id"],
        challenge=int(row["challenge"], 16),
        response=ResponseWord(
            region=int(row["region"]), code=int(row["code"]), bits=int(row["bits"])
        ),
        conditions=Conditions(
            temperature=float(row["temperature"]),
            noise_sigma=float(row["noise_sigma"]),
            noise_seed=int(row["noise_seed"]),
        ),
    )


def save_csv(dataset: CrpDataset, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        for r in dataset.records:
            writer.writerow(_record_row(r))


def load_csv(path: str | Path) -> CrpDataset:
    with open(path, newline="") as fh:
        records = [_row_record(row) for row in csv.DictReader(fh)]
    return CrpDataset(records=records)


def save_jsonl(dataset: CrpDataset, path: str | Path) -> None:
    with open(path, "w") as fh:
        if dataset.metadata:
            fh.write(json.dumps({"_meta": dataset.metadata}, sort_keys=True) + "\n")
        for r in dataset.records:
            fh.write(json.dumps(_record_row(r), sort_keys=True) + "\n")


def load_jsonl(path: str | Path) -> CrpDataset:
    records: list[CrpRecord] = []
    metadata: dict = {}
    with open(path) as fh:
        for line in fh:
            doc = json.loads(line)
            if "_meta" in doc:
                metadata = doc["_meta"]
            else:
                records.append(_row_record(doc))
    return CrpDataset(records=records, metadata=metadata)
