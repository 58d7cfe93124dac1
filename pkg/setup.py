import os

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Build the trajectory kernel if possible, fall back to pure Python."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler, broken toolchain
            print(f"warning: compiled kernel skipped ({exc}); "
                  "the pure-Python engine will be used")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: building {ext.name} failed ({exc}); "
                  "the pure-Python engine will be used")


ext_modules = []
if os.environ.get("SSTPSIM_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [Extension("sstpsim.backends._sstp_core",
                       ["src/sstpsim/backends/_sstp_core.pyx"])],
            language_level="3",
        )
    except ImportError:
        print("warning: Cython not available; the pure-Python engine "
              "will be used")

setup(ext_modules=ext_modules, cmdclass={"build_ext": optional_build_ext})
