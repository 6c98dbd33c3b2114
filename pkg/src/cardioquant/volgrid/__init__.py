"""Volumes, meshes, pre/post-processing and surface sampling."""
from .mesh import SurfaceMesh, extract_isosurface, read_obj, vertex_normals, write_obj
from .processing import crop_roi, fill_holes, largest_component, zscore_normalize
from .sampling import Profile, project_labels_to_surface, sample_all_msp, sample_msp, trilinear
from .volume import LABEL, SCALAR, Volume, VolumeFormatError, as_array, read_volume, write_volume


def volume_io(path, direction, vol=None):
    """Read (``direction="read"``) or write (``direction="write"``) a cqvol volume."""
    if direction == "read":
        return read_volume(path)
    if direction == "write":
        if vol is None:
            raise ValueError("writing needs a volume")
        write_volume(path, vol)
        return None
    raise ValueError(f"direction must be 'read' or 'write', got {direction!r}")


__all__ = [
    "LABEL",
    "SCALAR",
    "Profile",
    "SurfaceMesh",
    "Volume",
    "VolumeFormatError",
    "as_array",
    "crop_roi",
    "extract_isosurface",
    "fill_holes",
    "largest_component",
    "project_labels_to_surface",
    "read_obj",
    "read_volume",
    "sample_all_msp",
    "sample_msp",
    "trilinear",
    "vertex_normals",
    "volume_io",
    "write_obj",
    "write_volume",
    "zscore_normalize",
]
