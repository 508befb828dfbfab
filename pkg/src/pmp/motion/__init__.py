from .buffers import PartBuffers, RingBuffer, demo_blend
from .clip import (CONTROL_FPS, STYLE_PERIOD, STYLES, WALKER_JOINTS, ClipError, MotionClip,
                   generate_procedural_clip, load_clip, save_clip)
from .parts import (Part, PartObserver, PartSpec, PartSpecError, clip_full_q, clip_to_demo_pairs,
                    extract_part_obs, sample_reference_init, whole_body_spec)
