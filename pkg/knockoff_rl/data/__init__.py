# knockoff_rl/data/__init__.py

from knockoff_rl.data.buffer_io import buffer_to_frame, frame_to_buffer, load_buffer, save_buffer

__all__ = ["buffer_to_frame", "frame_to_buffer", "load_buffer", "save_buffer"]
