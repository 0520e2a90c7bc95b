# EWC package
