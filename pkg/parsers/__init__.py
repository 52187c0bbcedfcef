# parsers/__init__.py 