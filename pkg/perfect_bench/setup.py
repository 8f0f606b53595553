from lib import __generate_git_perfect_bench_version
from setuptools import setup


def main():
    package_base = "perfect_bench"

    # List the packages and their dir mapping:
    # "install_destination_package_path": "source_dir_path"
    package_dir_map = {
        f"{package_base}": ".",
        f"{package_base}.chains": "chains",
        f"{package_base}.examples": "examples",
        f"{package_base}.lib": "lib",
        f"{package_base}.test": "test",
        f"{package_base}.tools": "tools",
    }

    packages = list(package_dir_map)

    perfect_bench_version = __generate_git_perfect_bench_version()
    with open("./lib/_version.py", "w") as version_out:
        version_out.write(f"__perfect_bench_version='{perfect_bench_version}'")

    setup(
        name="perfect-bench",
        version=perfect_bench_version,
        python_requires=">=3.8",
        packages=packages,
        package_dir=package_dir_map,
        package_data={
            f"{package_base}.examples": ["configs/*.json"],
            f"{package_base}.test": ["configs/*.json"],
        },
        install_requires=["numpy", "scipy"],
        entry_points={
            "console_scripts": [
                "perfect-sample = perfect_bench.tools.perfect_sample:main",
            ]
        },
    )


if __name__ == "__main__":
    main()
