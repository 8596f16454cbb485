from setuptools import find_packages, setup

setup(
    name="pie-solver",
    version="0.1.0",
    description="Solvability analysis and numerical solution of partial integral equations",
    package_dir={"": "src"},
    packages=find_packages(where="src"),
    python_requires=">=3.9",
    install_requires=[
        "numpy>=1.24",
        "scipy>=1.10",
        "pandas>=1.5",
        "python-dotenv",
    ],
    extras_require={"test": ["pytest>=7.0", "hypothesis>=6.0"]},
    entry_points={"console_scripts": ["pie-solve=pie_solver.pie_solver_app:main"]},
)
