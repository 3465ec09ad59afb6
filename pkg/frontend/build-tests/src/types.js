/** Wire types mirrored from the service JSON responses. */
export {};
