# Sharp constants package
