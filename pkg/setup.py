from setuptools import setup, find_packages

setup(
    name="kgexplain",
    version="0.1.0",
    description="Knowledge-graph evidence selection and explanation faithfulness metrics",
    package_dir={"": "src"},
    packages=find_packages("src"),
    python_requires=">=3.9",
    install_requires=[
        "numpy>=1.24.0",
        "pandas>=2.0.0",
        "Jinja2>=3.1.0",
        "requests>=2.31.0",
        "python-dotenv>=1.0.0",
        "python-dateutil>=2.8.0",
        "openpyxl>=3.1.2",
        "streamlit>=1.31.0",
        "tomli>=2.0.0; python_version<'3.11'",
    ],
    extras_require={
        "dev": ["pytest>=7.4.0"],
    },
    entry_points={
        "console_scripts": [
            "kgexplain=kgexplain.cli.main:main",
        ],
    },
)
