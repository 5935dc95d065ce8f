from typing import List
from setuptools import setup, find_packages


def get_requirements(root_path: str) -> List[str]:
    with open(f"{root_path}/requirements.txt") as f:
        return f.read().splitlines()


core_requirements = get_requirements(".")


setup(
    name="ids-lab",
    version="0.1.0",
    description="Integrated density of states laboratory for random lattice operators",
    long_description=open("README.md").read(),
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["tests", "examples*"]),
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
    ],
    python_requires=">=3.11",
    install_requires=core_requirements,
    extras_require={
        "dev": ["pytest>=8.0.0"],
    },
    entry_points={"console_scripts": ["ids-lab=idslab.development.cli:main"]},
)
