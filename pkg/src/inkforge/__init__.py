"""inkforge: an offline-to-online handwriting toolkit.

Ink data model and InkML I/O, normalization and coordinate tokenization,
the augmentation renderer, five-task training-example generation, a
classical geometric derendering baseline, a full-page crop/derender/paste
pipeline with pluggable backends, and automated evaluation metrics.
"""

from ._accel import backend_name
from .errors import (
    BackendError,
    EmptyInkError,
    InkError,
    InkmlError,
    TokenError,
    ValidationError,
)
from .ink import (
    BoundingBox,
    CanvasTransform,
    DigitalInk,
    Point,
    Stroke,
    bounds,
    total_points,
    transform,
)
from .inkml import InkmlDocument, load_inkml, parse_inkml, save_inkml, serialize_inkml
from .normalize import (
    ResampleSpec,
    SimplifySpec,
    fit_to_canvas,
    hallucinate_time,
    resample_time,
    rotate_ink,
    simplify,
)
from .tokens import (
    Task,
    TaskPrompt,
    TokenSeq,
    Vocabulary,
    build_prompt,
    build_target,
    decode_ink,
    decode_tokens,
    encode_ink,
    format_tokens,
    parse_tokens,
)
from .raster import (
    AugmentProbs,
    AugmentationSpec,
    RasterImage,
    Ruling,
    draw_strokes,
    fit_image,
    load_png,
    plain_spec,
    render,
    sample_augmentation,
    save_png,
    spec_from_kv,
    spec_to_kv,
)
from .geometry import (
    BinaryImage,
    SkeletonGraph,
    binarize,
    build_skeleton_graph,
    count_components,
    derender_word,
    route_edges,
    skeletonize,
    trace_strokes,
)
from .metrics import CharBox, F1Report, StrokeStats, chamfer, char_f1, iou, stroke_stats
from .mixture import (
    MixtureSpec,
    Sample,
    Sources,
    TrainingExample,
    draw_tasks,
    make_example,
    stream,
    write_example,
)
from .page import (
    DerenderBackend,
    EchoBackend,
    GeoBackend,
    PageResult,
    SubprocessBackend,
    WordBox,
    derender_page,
    filter_box,
    load_wordboxes,
    segment_words,
)
from .svg import ink_to_svg

__version__ = "0.1.0"
