from setuptools import setup, find_packages

setup(
    name="info-diffusion-game",
    version="1.0.0",
    author="Diffusion Game Development Team",
    author_email="diffusion-game.dev@example.com",
    description="Graphical evolutionary game model of information diffusion on social networks",
    long_description=open("README.md").read(),
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=("tests",)),
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
    ],
    python_requires=">=3.8",
    install_requires=[
        "numpy>=1.20.0",
        "scipy>=1.6.0",
        "networkx>=2.8",
    ],
    entry_points={
        "console_scripts": [
            "diffusion-game=src.cli:main",
        ],
    },
)
