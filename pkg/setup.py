from setuptools import setup, find_packages

setup(
    name="qgraph",
    version="0.1.0",
    packages=find_packages(exclude=["examples", "examples.*"]),
    include_package_data=True,
    description="Spectra, scattering matrices and trace formulae of quantum graphs",
    author="qgraph Team",
    python_requires=">=3.10",
    install_requires=[
        "numpy>=1.24",
        "scipy>=1.10",
        "networkx>=3.1",
        "pydantic>=2.4.2",
        "pydantic-settings>=2.0.3",
        "python-dotenv>=1.0.0",
        "python-json-logger>=2.0.7",
    ],
    entry_points={
        "console_scripts": [
            "qgraph=qgraph.main:main",
        ],
    },
)
