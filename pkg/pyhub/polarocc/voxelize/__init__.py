from .cloud import CSV_HEADER, PointCloud, load_cloud, save_cloud
from .histogram import HistogramRow, band_index, center_radii, density_ratio, occupancy_histogram
from .volume import FeatureVolume, VoxelizeDiagnostics
from .voxelizer import CHANNEL_NAMES, N_CHANNELS, normalize_features, voxel_point_counts, voxelize_points

__all__ = [
    "CHANNEL_NAMES",
    "CSV_HEADER",
    "N_CHANNELS",
    "FeatureVolume",
    "HistogramRow",
    "PointCloud",
    "VoxelizeDiagnostics",
    "band_index",
    "center_radii",
    "density_ratio",
    "load_cloud",
    "normalize_features",
    "occupancy_histogram",
    "save_cloud",
    "voxel_point_counts",
    "voxelize_points",
]
