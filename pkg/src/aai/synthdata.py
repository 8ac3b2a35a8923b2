"""Deterministic synthetic tri-modal dataset plus an analytic oracle classifier.

Each class owns a prototype: a sinusoid "spectrogram" pattern for audio
(class frequency along the row axis) and a striped color image. A clip is
one draw: prototype patterns plus a single Gaussian noise field that is
shared between the clip's audio and all of its frames, so the two modalities
of a clip carry a common latent fingerprint on top of the class pattern.
Images live in [-1, 1] and are clamped after noise.

The oracle classifier scores an image by mean color and the magnitude
spectrum of its vertical stripe profile, then picks the nearest prototype
(ties broken by lowest class id). It is the ground-truth judge used to score
generated images.
"""

import dataclasses
import os

import numpy as np

from . import tensorio

IMAGE_SIZE = 16
STRIPE_AMPLITUDE = 0.25
MIN_COLOR_GAP = 0.3
FRAME_PHASE_DRIFT = 0.35

DEFAULT_LABEL_NAMES = [
    "sea", "thunder", "fire", "forest", "rain", "wind", "bird", "engine",
    "dog", "train", "river", "storm", "snow", "wave", "night", "city",
]

_GOLDEN_ANGLE = 2.399963229728653


@dataclasses.dataclass(frozen=True)
class ClassPrototype:
    class_id: int
    audio_freq: float
    audio_phase: float
    base_color: tuple  # RGB in [0, 1]
    stripe_freq: float
    stripe_phase: float
    label_text: str


@dataclasses.dataclass
class TriModalSample:
    audio: np.ndarray          # [1, 16, 16] float32
    frames: list               # F arrays [3, 16, 16] float32
    label_id: int
    clip_id: int
    split: str                 # "train" | "test"


@dataclasses.dataclass
class Dataset:
    prototypes: list
    samples: list
    noise_sigma: float
    seed: int

    @property
    def num_classes(self):
        return len(self.prototypes)

    def split(self, name):
        return [s for s in self.samples if s.split == name]

    def by_clip(self, clip_id):
        for s in self.samples:
            if s.clip_id == clip_id:
                return s
        raise KeyError(f"no clip with id {clip_id}")

    def label_name(self, class_id):
        return self.prototypes[class_id].label_text


def _label_text(class_id):
    if class_id < len(DEFAULT_LABEL_NAMES):
        return DEFAULT_LABEL_NAMES[class_id]
    return f"class{class_id}"


def _pick_colors(num_classes, rng):
    colors = []
    for _ in range(num_classes):
        for _attempt in range(20000):
            cand = rng.uniform(0.15, 0.85, size=3)
            if all(np.linalg.norm(cand - c) >= MIN_COLOR_GAP for c in colors):
                colors.append(cand)
                break
        else:
            raise ValueError(
                f"could not place {num_classes} base colors with gap {MIN_COLOR_GAP}")
    return colors


def build_prototypes(num_classes, seed):
    if num_classes < 2:
        raise ValueError("need at least 2 classes")
    rng = np.random.default_rng(seed)
    colors = _pick_colors(num_classes, rng)
    freqs = np.linspace(1.0, 7.5, num_classes)
    protos = []
    for c in range(num_classes):
        protos.append(ClassPrototype(
            class_id=c,
            audio_freq=float(freqs[c]),
            audio_phase=float((c * _GOLDEN_ANGLE) % (2 * np.pi)),
            base_color=tuple(float(v) for v in colors[c]),
            stripe_freq=float(freqs[(c * 3 + 1) % num_classes]),
            stripe_phase=float((c * _GOLDEN_ANGLE * 0.5) % (2 * np.pi)),
            label_text=_label_text(c),
        ))
    return protos


def audio_pattern(proto: ClassPrototype) -> np.ndarray:
    """Noiseless class spectrogram, [1, 16, 16] float32."""
    y = np.arange(IMAGE_SIZE)[:, None]
    x = np.arange(IMAGE_SIZE)[None, :]
    rows = np.sin(2 * np.pi * proto.audio_freq * y / IMAGE_SIZE + proto.audio_phase)
    cols = 0.6 + 0.4 * np.cos(2 * np.pi * x / IMAGE_SIZE)
    return (rows * cols)[None].astype(np.float32)


def image_pattern(proto: ClassPrototype, frame_index: int = 0) -> np.ndarray:
    """Noiseless class image for one frame, [3, 16, 16] float32 in [-1, 1].

    Frames of a clip advance the stripe phase slightly, standing in for
    motion in a short video.
    """
    y = np.arange(IMAGE_SIZE)[:, None]
    phase = proto.stripe_phase + FRAME_PHASE_DRIFT * frame_index
    stripe = STRIPE_AMPLITUDE * np.sin(2 * np.pi * proto.stripe_freq * y / IMAGE_SIZE + phase)
    base = 2.0 * np.asarray(proto.base_color) - 1.0
    img = base[:, None, None] + np.broadcast_to(stripe, (IMAGE_SIZE, IMAGE_SIZE))[None]
    return img.astype(np.float32)


def generate_dataset(num_classes, train_per_class, test_per_class, noise_sigma,
                     seed, frames=4) -> Dataset:
    """Deterministic dataset: identical arguments give bit-identical samples."""
    if num_classes < 2:
        raise ValueError("need at least 2 classes")
    if train_per_class < 1 or test_per_class < 1:
        raise ValueError("per-class sample counts must be positive")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be nonnegative")
    if frames < 1:
        raise ValueError("need at least one frame per clip")

    protos = build_prototypes(num_classes, seed)
    rng = np.random.default_rng(seed + 1)
    samples = []
    clip_id = 0
    for split, per_class in (("train", train_per_class), ("test", test_per_class)):
        for c in range(num_classes):
            proto = protos[c]
            base_audio = audio_pattern(proto).astype(np.float64)
            base_frames = [image_pattern(proto, j).astype(np.float64) for j in range(frames)]
            for _ in range(per_class):
                noise = rng.normal(0.0, noise_sigma, size=(IMAGE_SIZE, IMAGE_SIZE)) \
                    if noise_sigma > 0 else np.zeros((IMAGE_SIZE, IMAGE_SIZE))
                audio = (base_audio + noise[None]).astype(np.float32)
                frame_list = [
                    np.clip(bf + noise[None], -1.0, 1.0).astype(np.float32)
                    for bf in base_frames
                ]
                samples.append(TriModalSample(
                    audio=audio, frames=frame_list, label_id=c,
                    clip_id=clip_id, split=split))
                clip_id += 1
    return Dataset(prototypes=protos, samples=samples,
                   noise_sigma=noise_sigma, seed=seed)


# ---------------------------------------------------------------------------
# oracle classifier

def _image_feature(image: np.ndarray) -> np.ndarray:
    means = image.mean(axis=(1, 2))
    profile = image.mean(axis=(0, 2))  # vertical luminance profile
    spectrum = np.abs(np.fft.rfft(profile))[1:] * (2.0 / IMAGE_SIZE)
    return np.concatenate([means, spectrum])


def prototype_features(prototypes) -> np.ndarray:
    return np.stack([_image_feature(image_pattern(p, 0).astype(np.float64))
                     for p in prototypes])


def oracle_classify(prototypes, image: np.ndarray) -> int:
    """Nearest prototype by mean-color + stripe-spectrum feature distance.

    Deterministic; ties resolve to the lowest class id.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.shape != (3, IMAGE_SIZE, IMAGE_SIZE):
        raise ValueError(f"expected [3, {IMAGE_SIZE}, {IMAGE_SIZE}] image, got {image.shape}")
    if not np.all(np.isfinite(image)):
        raise ValueError("image contains non-finite entries")
    feats = prototype_features(prototypes)
    dists = np.linalg.norm(feats - _image_feature(image)[None], axis=1)
    return int(np.argmin(dists))


def oracle_accuracy(prototypes, images, labels) -> float:
    hits = sum(oracle_classify(prototypes, img) == lab
               for img, lab in zip(images, labels))
    return hits / len(labels)


# ---------------------------------------------------------------------------
# persistence

def save_dataset(dataset: Dataset, directory) -> None:
    os.makedirs(os.path.join(directory, "tensors"), exist_ok=True)
    entries = []
    for s in dataset.samples:
        audio_file = f"tensors/clip_{s.clip_id:05d}_audio.aai"
        frames_file = f"tensors/clip_{s.clip_id:05d}_frames.aai"
        tensorio.save_tensor(os.path.join(directory, audio_file), s.audio)
        tensorio.save_tensor(os.path.join(directory, frames_file), np.stack(s.frames))
        entries.append({
            "clip_id": s.clip_id, "label_id": s.label_id, "split": s.split,
            "audio": audio_file, "frames": frames_file,
        })
    manifest = {
        "format": "aai-dataset",
        "version": 1,
        "noise_sigma": dataset.noise_sigma,
        "seed": dataset.seed,
        "prototypes": [dataclasses.asdict(p) for p in dataset.prototypes],
        "samples": entries,
    }
    tensorio.write_json(os.path.join(directory, "manifest.json"), manifest)


def load_dataset(directory) -> Dataset:
    manifest = tensorio.read_json(os.path.join(directory, "manifest.json"))
    if manifest.get("format") != "aai-dataset":
        raise tensorio.FormatError(f"{directory} is not a dataset directory")
    protos = [ClassPrototype(**{**p, "base_color": tuple(p["base_color"])})
              for p in manifest["prototypes"]]
    samples = []
    for e in manifest["samples"]:
        audio = tensorio.load_tensor(os.path.join(directory, e["audio"]))
        frames = tensorio.load_tensor(os.path.join(directory, e["frames"]))
        samples.append(TriModalSample(
            audio=audio, frames=[f for f in frames], label_id=e["label_id"],
            clip_id=e["clip_id"], split=e["split"]))
    return Dataset(prototypes=protos, samples=samples,
                   noise_sigma=manifest["noise_sigma"], seed=manifest["seed"])
