from django.db.models import IntegerChoices, TextChoices


class FormatChoices(TextChoices):
    JSON = "json"
    TABLE = "table"


class GridPreset(TextChoices):
    FULL = "full"
    DESK = "desk"
    TINY = "tiny"


class PaddingMode(TextChoices):
    ZERO = "zero"
    WRAP = "wrap"


class Topology(TextChoices):
    SERIAL = "a", "serial (a)"
    PARALLEL = "b", "parallel (b)"
    HYBRID_C = "c", "hybrid (c)"
    HYBRID_D = "d", "hybrid (d)"
    ASSYM = "assym", "single serial (assym)"
    NAIVE = "naive", "full 3d (naive)"

    @classmethod
    def decomposed(cls) -> list["Topology"]:
        return [cls.SERIAL, cls.PARALLEL, cls.HYBRID_C, cls.HYBRID_D]


class FusionMode(TextChoices):
    LIDAR_ONLY = "lidar_only"
    FUSED = "fused"


class CloudFormat(TextChoices):
    CSV = "csv"
    BIN = "bin"


class AblationStudy(TextChoices):
    COMPONENTS = "components"
    PDCONV = "pdconv"
    GRP = "grp"


class SemanticClass(IntegerChoices):
    FREE = 0, "free"
    ROAD = 1, "road"
    SIDEWALK = 2, "sidewalk"
    TERRAIN = 3, "terrain"
    BUILDING = 4, "building"
    CAR = 5, "car"
    POLE = 6, "pole"
    VEGETATION = 7, "vegetation"

    @classmethod
    def stuff(cls) -> list["SemanticClass"]:
        return [cls.ROAD, cls.SIDEWALK, cls.TERRAIN, cls.BUILDING, cls.VEGETATION]

    @classmethod
    def names(cls) -> list[str]:
        return [str(label) for label in cls.labels]
