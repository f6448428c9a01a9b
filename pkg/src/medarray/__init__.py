"""Median-filter and color-conversion kernels plus a deterministic
simulation of a master/worker processor array.

The package has four layers:

* :mod:`medarray.image` -- 8-bit rasters, Netpbm I/O, impulse noise.
* :mod:`medarray.median` -- the median kernel family and sliding-window
  drivers, including the fixed compare-exchange network that models a
  wide-register median instruction.
* :mod:`medarray.colorspace` -- RGB conversions in float and Q8.8
  fixed-point arithmetic.
* :mod:`medarray.pearray` / :mod:`medarray.dvr` -- the cooperative
  processor-array simulation with cycle accounting, and the frame
  pipeline that stitches noisy/filtered composites.

Everything is value-in/value-out and deterministic for a fixed seed.
"""

from .image import (
    FormatError,
    Image,
    MalformedHeaderError,
    NoiseSpec,
    TruncatedDataError,
    UnsupportedInputError,
    UnsupportedMaxvalError,
    count_residual_impulses,
    inject_impulse_noise,
    read_image,
    write_image,
)
from .median import (
    MEDIAN9_PAIRS,
    MEDIAN9_RESULT_LANE,
    AdaptiveParams,
    WideRegister,
    adaptive_median_filter,
    extract_window,
    median9_approx,
    median9_naive,
    median9_widereg,
    median_filter,
    pack_window,
    run_median9_network,
)
from .colorspace import (
    CONVERSIONS,
    ColorMatrix,
    convert_image,
    convert_pixel_q88,
    convert_pixel_real,
    get_matrix,
    inverse_matrix,
)
from .pearray import (
    CostWeights,
    LedgerRow,
    MalformedTableError,
    Message,
    OpCounts,
    Runtime,
    RuntimeStateError,
    TaskEntry,
    TaskTable,
    TraceEvent,
    WorkerFailureError,
    init_runtime,
    register_task,
)
from .dvr import (
    GEOMETRY_PRESETS,
    FrameSource,
    FpsReport,
    PipelineReport,
    fps_report,
    frame_seed,
    run_pipeline,
)
from .rng import SplitMix64

__version__ = "0.1.0"
