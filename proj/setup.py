import shutil
import subprocess
import sys
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class cmake_extension(Extension):
    def __init__(self, name):
        super().__init__(name, sources=[])


class cmake_build(build_ext):
    def build_extension(self, ext):
        source_dir = Path(__file__).resolve().parent
        build_dir = Path(self.build_temp).resolve()
        build_dir.mkdir(parents=True, exist_ok=True)
        subprocess.run(
            [
                "cmake",
                "-S", str(source_dir),
                "-B", str(build_dir),
                "-DCMAKE_BUILD_TYPE=Release",
                f"-DPython3_EXECUTABLE={sys.executable}",
            ],
            check=True,
        )
        subprocess.run(["cmake", "--build", str(build_dir), "--target", "_core", "-j2"], check=True)
        dest = Path(self.get_ext_fullpath(ext.name)).resolve().parent / "tubelab"
        dest.mkdir(parents=True, exist_ok=True)
        for f in (build_dir / "python" / "tubelab").iterdir():
            shutil.copy2(f, dest / f.name)


setup(
    ext_modules=[cmake_extension("tubelab._core")],
    cmdclass={"build_ext": cmake_build},
)
