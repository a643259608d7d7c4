"""Toolkit for rotated-box object detection: geometry, offset coding, losses,
anchor sampling, suppression, attention-mask targets, and mAP evaluation."""

from .attention import MaskGrid, mask_to_pgm, rasterize_mask
from .coding import RegressionTarget, decode, encode
from .evaluation import (
    DOTA_CLASSES,
    DetRecord,
    EvalReport,
    GroundTruthSet,
    GtInstance,
    TilePlan,
    average_precision,
    evaluate,
    load_detections,
    load_ground_truth,
    match_detections,
    tile_plan,
)
from .geometry import (
    AxisAlignedBox,
    ConvexPolygon,
    Quadrilateral,
    RotatedBox,
    aabb_iou,
    canonicalize,
    convex_intersection,
    hbb_of,
    quad_to_rbox,
    rbox_to_quad,
    skew_iou,
)
from .losses import (
    LossWeights,
    Proposal,
    ProposalBatch,
    attention_loss,
    attention_loss_with_grad,
    classification_loss,
    iou_smooth_l1_reg,
    multitask_loss,
    numerical_gradient,
    smooth_l1,
)
from .postprocess import Detection, merge_tiles, nms, rnms, top_k_then_nms
from .sampling import (
    AnchorSet,
    AnchorSpec,
    AssignmentResult,
    assign_labels,
    expected_max_iou,
    generate_anchors,
)

__version__ = "0.1.0"
