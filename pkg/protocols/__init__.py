# Protocols package
